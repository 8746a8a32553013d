//! Plain-text data files. Every number is written with 17 significant
//! digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use wfdrift_core::{DensityField, Diagnostics, NewtonStats};

use crate::{io_err, CliError};

pub const SNAPSHOT_HEADER: &str = "index,position,density,mass";
pub const DIAGNOSTICS_HEADER: &str = "time,total_mass,barycenter,energy,f_l,f_r,M_l,M_r";
pub const ENERGY_HEADER: &str =
    "step,time,energy_before,energy_after,dissipation,newton_iterations,newly_fixed";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:05}.csv")
}

pub fn particles_name(k: usize) -> String {
    format!("particles_{k:05}.csv")
}

/// Writes one snapshot after checking that its mass column sums to
/// `expected` within `1e-12` relative to the total absolute mass.
pub fn write_snapshot(path: &Path, field: &DensityField, expected: f64) -> Result<(), CliError> {
    let sum: f64 = field.masses.iter().sum();
    let scale: f64 = field.masses.iter().map(|m| m.abs()).sum::<f64>().max(1.0);
    if (sum - expected).abs() > 1e-12 * scale {
        return Err(CliError::Invariant(format!(
            "{}: mass column sums to {sum:e}, expected {expected:e}",
            path.display()
        )));
    }
    let mut out = String::with_capacity(80 * field.len());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for k in 0..field.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            field.index(k),
            num(field.positions[k]),
            num(field.density[k]),
            num(field.masses[k])
        );
    }
    write(path, &out)
}

pub fn diagnostics_row(d: &Diagnostics) -> String {
    [
        d.time,
        d.total_mass,
        d.barycenter,
        d.energy,
        d.f_left,
        d.f_right,
        d.mass_left,
        d.mass_right,
    ]
    .iter()
    .map(|v| num(*v))
    .collect::<Vec<_>>()
    .join(",")
}

pub fn write_diagnostics(path: &Path, rows: &[Diagnostics]) -> Result<(), CliError> {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in rows {
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    write(path, &out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub dissipation: f64,
    pub newton_iterations: usize,
    pub newly_fixed: usize,
}

pub fn write_energy_trace(path: &Path, rows: &[EnergyRow]) -> Result<(), CliError> {
    let mut out = String::from(ENERGY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            num(r.time),
            num(r.energy_before),
            num(r.energy_after),
            num(r.dissipation),
            r.newton_iterations,
            r.newly_fixed
        );
    }
    write(path, &out)
}

/// All `N + 1` particle positions.
pub fn write_particles(path: &Path, x: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("index,position\n");
    for (i, v) in x.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", num(*v));
    }
    write(path, &out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotMeta {
    pub file: String,
    pub time: f64,
    pub step: usize,
    /// Negative densities small enough to count as round-off; they are
    /// kept in the data file and only reported here.
    pub negative_dust_entries: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a> {
    pub crate_version: &'static str,
    pub config: &'a crate::RunConfig,
    pub wall_time_seconds: f64,
    pub steps: usize,
    pub steady: bool,
    /// One entry for single runs; `g` then `w` for split runs.
    pub newton: Vec<(&'static str, NewtonStats)>,
    pub snapshots: Vec<SnapshotMeta>,
}

pub fn write_metadata(path: &Path, meta: &Metadata) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(meta).map_err(|e| CliError::Invariant(e.to_string()))?;
    write(path, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use wfdrift_core::{FreeRange, ParticleState};

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 8.2235e9, -1e-300, f64::MAX] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn snapshot_mass_is_checked() {
        let state = ParticleState {
            x: wfdrift_core::EdgeFunction::new(vec![0.0, 0.5, 1.0]).unwrap(),
            m0: vec![0.25, 0.5, 0.25],
            free: FreeRange::full(2),
            t: 0.0,
            step_count: 0,
        };
        let field = wfdrift_core::recover_density(&state, 1e-10);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_snapshot(&path, &field, 1.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(SNAPSHOT_HEADER));
        assert_eq!(text.lines().count(), 4);
        assert!(matches!(
            write_snapshot(&path, &field, 1.1),
            Err(CliError::Invariant(_))
        ));
    }
}
