//! Executes one [`RunConfig`] and writes its data files.

use std::path::Path;
use std::time::Instant;

use log::info;

use wfdrift_core::delta::{clamp_dust, SplitRun, DUST_TOLERANCE};
use wfdrift_core::{DensityField, Diagnostics, NewtonStats, Simulation};

use crate::config::{Emit, ProblemKind, RunConfig};
use crate::output::{self, EnergyRow, Metadata, SnapshotMeta};
use crate::{io_err, CliError};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub steady: bool,
    pub final_diagnostics: Diagnostics,
    pub wall_time_seconds: f64,
}

/// Collects everything written at the output times.
struct Emitter<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    diagnostics: Vec<Diagnostics>,
    snapshots: Vec<SnapshotMeta>,
}

impl Emitter<'_> {
    fn output(
        &mut self,
        step: usize,
        field: &DensityField,
        diag: Diagnostics,
        positions: &[f64],
        expected_mass: f64,
    ) -> Result<(), CliError> {
        let k = self.diagnostics.len();
        info!(
            "t = {:.6} M = {:.12} bary = {:.6} f_l = {:.4e} f_r = {:.4e}",
            diag.time, diag.total_mass, diag.barycenter, diag.f_left, diag.f_right
        );
        if self.cfg.emit.contains(&Emit::Snapshots) {
            let file = output::snapshot_name(k);
            output::write_snapshot(&self.dir.join(&file), field, expected_mass)?;
            self.snapshots.push(SnapshotMeta {
                file,
                time: diag.time,
                step,
                negative_dust_entries: clamp_dust(field, DUST_TOLERANCE).1,
            });
        }
        if self.cfg.emit.contains(&Emit::ParticleTrace) {
            output::write_particles(&self.dir.join(output::particles_name(k)), positions)?;
        }
        self.diagnostics.push(diag);
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut emitter = Emitter {
        cfg,
        dir,
        diagnostics: Vec::new(),
        snapshots: Vec::new(),
    };

    let (steps, steady, newton, energy) = if cfg.problem.is_split() {
        let (steps, steady, newton) = run_split(cfg, &mut emitter)?;
        (steps, steady, newton, Vec::new())
    } else {
        run_single(cfg, &mut emitter)?
    };

    if cfg.emit.contains(&Emit::Diagnostics) {
        output::write_diagnostics(&dir.join("diagnostics.csv"), &emitter.diagnostics)?;
    }
    if cfg.emit.contains(&Emit::EnergyTrace) {
        output::write_energy_trace(&dir.join("energy_trace.csv"), &energy)?;
    }
    let wall_time_seconds = start.elapsed().as_secs_f64();
    output::write_metadata(
        &dir.join("metadata.json"),
        &Metadata {
            crate_version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            wall_time_seconds,
            steps,
            steady,
            newton,
            snapshots: emitter.snapshots.clone(),
        },
    )?;
    let final_diagnostics = *emitter.diagnostics.last().expect("at least one output");
    Ok(RunSummary {
        steps,
        steady,
        final_diagnostics,
        wall_time_seconds,
    })
}

type StatsList = Vec<(&'static str, NewtonStats)>;

type SingleOutcome = (usize, bool, StatsList, Vec<EnergyRow>);

fn run_single(cfg: &RunConfig, emitter: &mut Emitter) -> Result<SingleOutcome, CliError> {
    let mut sim = Simulation::new(cfg.problem_spec()?, cfg.solver())?;
    let total = sim.state().total_mass();
    let trace = cfg.emit.contains(&Emit::EnergyTrace);
    let mut stats = NewtonStats::default();
    let mut energy = Vec::new();
    let mut steady = false;
    for target in cfg.output_steps() {
        steady = sim.run_to_step(target, |state, rec| {
            stats.record(&rec.newton);
            if trace {
                energy.push(EnergyRow {
                    step: state.step_count,
                    time: state.t,
                    energy_before: rec.energy_before,
                    energy_after: rec.energy_after,
                    dissipation: rec.dissipation,
                    newton_iterations: rec.newton.iterations,
                    newly_fixed: rec.newly_fixed,
                });
            }
        })?;
        let state = sim.state();
        emitter.output(
            state.step_count,
            &sim.field(),
            sim.diagnostics()?,
            state.x.values(),
            total,
        )?;
        if steady {
            info!("all particles fixed at t = {}", state.t);
            break;
        }
    }
    Ok((
        sim.state().step_count,
        steady,
        vec![("single", stats)],
        energy,
    ))
}

fn run_split(cfg: &RunConfig, emitter: &mut Emitter) -> Result<(usize, bool, StatsList), CliError> {
    let selection = match cfg.problem {
        ProblemKind::SemiSelection => cfg.selection.map(|s| (s.s, s.ne)),
        _ => None,
    };
    let mut split = SplitRun::new(&cfg.delta_spec(), cfg.n, selection, cfg.solver())?;
    let signed_total = split.w().state().total_mass() - split.g().state().total_mass();
    let mut steady = false;
    for target in cfg.output_steps() {
        split.run_to_step(target)?;
        let time = target as f64 * cfg.tau;
        let snap = split.snapshot(time)?;
        let w = split.w().state();
        emitter.output(
            target,
            &snap.field,
            snap.diagnostics,
            w.x.values(),
            signed_total,
        )?;
        steady = w.is_fully_fixated() && split.g().state().is_fully_fixated();
        if steady {
            info!("both sub-runs fully fixed at t = {time}");
            break;
        }
    }
    let steps = split
        .w()
        .state()
        .step_count
        .max(split.g().state().step_count);
    let (g, w) = split.newton_stats();
    Ok((steps, steady, vec![("g", g), ("w", w)]))
}
