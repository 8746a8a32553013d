//! Run configuration, read from a single TOML document.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use wfdrift_core::problem::{polynomial_sine, uniform};
use wfdrift_core::{
    DeltaSpec, EdgeFunction, NewtonParams, ProblemSpec, SolverParams, DEFAULT_EPS0,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    PositiveInitial,
    PureDriftDelta,
    SemiSelection,
}

impl ProblemKind {
    pub fn is_split(self) -> bool {
        !matches!(self, ProblemKind::PositiveInitial)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Uniform,
    F02PolynomialSine,
    /// Density samples at the `n + 1` grid nodes.
    CustomSamples(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub s: f64,
    pub ne: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Snapshots,
    Diagnostics,
    EnergyTrace,
    ParticleTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSpec>,
    /// Number of cells, `h = 1 / n`.
    pub n: usize,
    pub tau: f64,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_times: Option<Vec<f64>>,
    /// Steps between outputs when `output_times` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_stride: Option<usize>,
    #[serde(default)]
    pub newton: NewtonParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: BTreeSet<Emit>,
}

fn default_eps0() -> f64 {
    DEFAULT_EPS0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_emit() -> BTreeSet<Emit> {
    [Emit::Snapshots, Emit::Diagnostics].into_iter().collect()
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {msg}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads and validates a config file. Relative output directories are
    /// resolved against the directory holding the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 2 {
            return Err(field("n", format!("need at least 2 cells, got {}", self.n)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(field("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(field(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        if !(self.eps0 > 0.0 && self.eps0 <= 1e-6) {
            return Err(field(
                "eps0",
                format!("must lie in (0, 1e-6], got {}", self.eps0),
            ));
        }
        self.newton.validate().map_err(|e| field("newton", e))?;
        if let Some(times) = &self.output_times {
            if self.output_stride.is_some() {
                return Err(field(
                    "output_stride",
                    "give either output_times or output_stride, not both",
                ));
            }
            if times.iter().any(|t| !(*t >= 0.0) || *t > self.t_end) {
                return Err(field("output_times", "every time must lie in [0, t_end]"));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(field("output_times", "must be strictly increasing"));
            }
        }
        if self.output_stride == Some(0) {
            return Err(field("output_stride", "must be at least 1"));
        }
        if let Some(sel) = &self.selection {
            wfdrift_core::delta::check_selection(sel.s, sel.ne)
                .map_err(|e| field("selection", e))?;
        }
        match self.problem {
            ProblemKind::PositiveInitial => {
                if self.delta.is_some() {
                    return Err(field("delta", "only used by the delta problems"));
                }
                match &self.initial {
                    None => return Err(field("initial", "required for positive_initial")),
                    Some(InitialKind::CustomSamples(v)) if v.len() != self.n + 1 => {
                        return Err(field(
                            "initial",
                            format!(
                                "custom_samples needs n + 1 = {} values, got {}",
                                self.n + 1,
                                v.len()
                            ),
                        ));
                    }
                    _ => {}
                }
            }
            kind => {
                if self.initial.is_some() {
                    return Err(field(
                        "initial",
                        "delta problems take their data from [delta]",
                    ));
                }
                self.delta_spec()
                    .validate()
                    .map_err(|e| field("delta", e))?;
                if kind == ProblemKind::SemiSelection && self.selection.is_none() {
                    return Err(field("selection", "required for semi_selection"));
                }
                if kind == ProblemKind::PureDriftDelta && self.selection.is_some() {
                    return Err(field(
                        "selection",
                        "pure_drift_delta has no selection; use semi_selection",
                    ));
                }
                if self.emit.contains(&Emit::EnergyTrace) {
                    return Err(field(
                        "emit",
                        "energy_trace is only available for positive_initial",
                    ));
                }
            }
        }
        // the problem itself must build
        if self.problem == ProblemKind::PositiveInitial {
            self.problem_spec()?;
        }
        Ok(())
    }

    pub fn delta_spec(&self) -> DeltaSpec {
        self.delta.unwrap_or_default()
    }

    pub fn solver(&self) -> SolverParams {
        SolverParams {
            tau: self.tau,
            eps0: self.eps0,
            newton: self.newton,
        }
    }

    pub fn initial_density(&self) -> Result<EdgeFunction, CliError> {
        let f0 = match self.initial.as_ref() {
            Some(InitialKind::Uniform) | None => uniform(self.n),
            Some(InitialKind::F02PolynomialSine) => polynomial_sine(self.n),
            Some(InitialKind::CustomSamples(v)) => EdgeFunction::new(v.clone()),
        };
        f0.map_err(|e| field("initial", e))
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let f0 = self.initial_density()?;
        let spec = match self.selection {
            Some(sel) => ProblemSpec::with_selection(f0, sel.s, sel.ne),
            None => ProblemSpec::pure_drift(f0),
        };
        spec.map_err(|e| field("initial", e))
    }

    pub fn steps_to(&self, t: f64) -> usize {
        (t / self.tau).round() as usize
    }

    /// Step indices at which output is written, always ending at `t_end`.
    pub fn output_steps(&self) -> Vec<usize> {
        let last = self.steps_to(self.t_end);
        let mut steps: Vec<usize> = match (&self.output_times, self.output_stride) {
            (Some(times), _) => times.iter().map(|t| self.steps_to(*t)).collect(),
            (None, Some(stride)) => (0..=last).step_by(stride).collect(),
            (None, None) => vec![0],
        };
        steps.push(last);
        steps.dedup();
        steps
    }
}
