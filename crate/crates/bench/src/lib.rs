//! Fixtures shared by the benchmarks.

use wfdrift_core::problem::{polynomial_sine, uniform};
use wfdrift_core::{DeltaSpec, ParticleState, ProblemSpec, Simulation, SolverParams};

/// Uniform or polynomial-sine problem on `n` cells with `tau = 1/n`.
pub fn table_problem(n: usize, sine: bool) -> (ProblemSpec, SolverParams) {
    let f0 = if sine { polynomial_sine(n) } else { uniform(n) }.expect("n >= 2");
    (
        ProblemSpec::pure_drift(f0).expect("valid density"),
        SolverParams::new(1.0 / n as f64),
    )
}

/// State after `steps` steps, once particles have started to fix.
pub fn advanced_state(n: usize, steps: usize) -> (ProblemSpec, SolverParams, ParticleState) {
    let (spec, solver) = table_problem(n, true);
    let mut sim = Simulation::new(spec.clone(), solver).expect("valid problem");
    sim.run_to_step(steps, |_, _| {}).expect("solver converges");
    (spec, solver, sim.state().clone())
}

/// Particle states of the two delta sub-runs after `steps` steps.
pub fn split_states(n: usize, steps: usize) -> (ParticleState, ParticleState) {
    let mut run = wfdrift_core::SplitRun::new(
        &DeltaSpec::new(0.4),
        n,
        None,
        SolverParams::new(1.0 / n as f64),
    )
    .expect("valid delta data");
    run.run_to_step(steps).expect("solver converges");
    (run.g().state().clone(), run.w().state().clone())
}
