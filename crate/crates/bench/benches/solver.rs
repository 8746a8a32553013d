use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use wfdrift_bench::{advanced_state, split_states};
use wfdrift_core::delta::mass_interpolate;
use wfdrift_core::{advance, solve_step, ObjectiveContext, DEFAULT_EPS0};

fn newton_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_step");
    for n in [100, 1000, 10000] {
        let (spec, solver, state) = advanced_state(n, n / 10);
        let ctx = ObjectiveContext::new(&spec, &state.x, solver.tau, state.free).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &ctx, |b, ctx| {
            b.iter(|| solve_step(black_box(ctx), &solver.newton).unwrap())
        });
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("advance");
    for n in [100, 1000, 10000] {
        let (spec, solver, state) = advanced_state(n, n / 10);
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, state| {
            b.iter(|| advance(black_box(state), &spec, &solver).unwrap())
        });
    }
    group.finish();
}

fn interpolation(c: &mut Criterion) {
    let mut group = c.benchmark_group("mass_interpolate");
    for n in [1000, 10000] {
        let (g, w) = split_states(n, n / 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(g, w), |b, (g, w)| {
            b.iter(|| mass_interpolate(black_box(g), black_box(w), DEFAULT_EPS0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, newton_step, time_step, interpolation);
criterion_main!(benches);
