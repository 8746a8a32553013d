//! Configuration, orchestration and data emission for `wfdrift` runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod report;
pub mod run;

use std::path::PathBuf;

pub use config::{Emit, InitialKind, ProblemKind, RunConfig, Selection};
pub use report::{report_table, ReportRow};
pub use run::{run, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(#[from] wfdrift_core::Error),

    /// An output check failed before the file was written.
    #[error("output check failed: {0}")]
    Invariant(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration errors, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Invariant(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// The Newton report carried by a non-convergence failure, if any.
    pub fn newton_report(&self) -> Option<&wfdrift_core::NewtonReport> {
        let CliError::Solver(e) = self else {
            return None;
        };
        let mut e = e;
        loop {
            match e {
                wfdrift_core::Error::NonConvergence(r) => return Some(r.as_ref()),
                wfdrift_core::Error::SubProblem { source, .. } => e = source.as_ref(),
                _ => return None,
            }
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
