//! Summary table over finished runs, one row per run from the last line of
//! its `diagnostics.csv`.

use std::fmt::Write as _;
use std::path::PathBuf;

use log::warn;

use crate::output::num;
use crate::RunConfig;

pub const REPORT_HEADER: &str = "h,tau,M_total,Barycenter,f_l,f_r,M_l,M_r";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub h: f64,
    pub tau: f64,
    pub total_mass: f64,
    pub barycenter: f64,
    pub f_left: f64,
    pub f_right: f64,
    pub mass_left: f64,
    pub mass_right: f64,
}

fn final_row(cfg: &RunConfig) -> Result<ReportRow, String> {
    let path: PathBuf = cfg.output_dir.join("diagnostics.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let last = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .last()
        .ok_or_else(|| format!("{}: no data rows", path.display()))?;
    let v: Vec<f64> = last
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    if v.len() != 8 {
        return Err(format!(
            "{}: expected 8 columns, found {}",
            path.display(),
            v.len()
        ));
    }
    Ok(ReportRow {
        h: cfg.h(),
        tau: cfg.tau,
        total_mass: v[1],
        barycenter: v[2],
        f_left: v[4],
        f_right: v[5],
        mass_left: v[6],
        mass_right: v[7],
    })
}

/// Rows for every run whose artifacts exist. Runs with missing or
/// unreadable artifacts are skipped and listed in the second return value.
pub fn report_table(configs: &[RunConfig]) -> (Vec<ReportRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for cfg in configs {
        match final_row(cfg) {
            Ok(r) => rows.push(r),
            Err(e) => {
                warn!("skipping run: {e}");
                skipped.push(e);
            }
        }
    }
    (rows, skipped)
}

pub fn render(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [
            r.h,
            r.tau,
            r.total_mass,
            r.barycenter,
            r.f_left,
            r.f_right,
            r.mass_left,
            r.mass_right,
        ];
        let _ = writeln!(
            out,
            "{}",
            cols.iter().map(|c| num(*c)).collect::<Vec<_>>().join(",")
        );
    }
    out
}
