//! Problem instances: initial density samples plus the optional
//! semi-dominant selection drift `M(x) = s x (1 - x)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::EdgeFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Initial density sampled at the grid nodes.
    pub f0: EdgeFunction,
    /// Selection strength `s`.
    pub s: f64,
    /// Effective population size `N_e`.
    pub ne: f64,
    pub selection_enabled: bool,
}

impl ProblemSpec {
    /// Pure drift (`M = 0`).
    pub fn pure_drift(f0: EdgeFunction) -> Result<Self> {
        let spec = Self {
            f0,
            s: 0.0,
            ne: 0.0,
            selection_enabled: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Drift with semi-dominant selection of strength `s` in a population
    /// of effective size `ne`.
    pub fn with_selection(f0: EdgeFunction, s: f64, ne: f64) -> Result<Self> {
        let spec = Self {
            f0,
            s,
            ne,
            selection_enabled: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self
            .f0
            .values()
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "initial density must be finite and non-negative, f0[{i}] = {}",
                self.f0[i]
            )));
        }
        if self.selection_enabled {
            if !self.s.is_finite() {
                return Err(Error::InvalidInput(
                    "selection strength must be finite".into(),
                ));
            }
            if !(self.ne > 0.0) || !self.ne.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "population size must be positive, got {}",
                    self.ne
                )));
            }
        }
        Ok(())
    }

    /// Coefficient of the explicit selection source, `4 s N_e` (zero when
    /// selection is disabled).
    pub fn selection_drift(&self) -> f64 {
        if self.selection_enabled {
            4.0 * self.s * self.ne
        } else {
            0.0
        }
    }

    pub fn cells(&self) -> usize {
        self.f0.cells()
    }

    pub fn h(&self) -> f64 {
        self.f0.h()
    }
}

/// `f0 = 1`.
pub fn uniform(n: usize) -> Result<EdgeFunction> {
    EdgeFunction::from_fn(n, |_| 1.0)
}

/// `f0(x) = (2 + 6x + (pi/2) sin(2 pi x)) / 5`, a unit-mass density with
/// mean 0.55.
pub fn polynomial_sine(n: usize) -> Result<EdgeFunction> {
    EdgeFunction::from_fn(n, polynomial_sine_at)
}

pub fn polynomial_sine_at(x: f64) -> f64 {
    (2.0 + 6.0 * x + 0.5 * PI * (2.0 * PI * x).sin()) / 5.0
}

/// Normal density `N(mean, sigma^2)` evaluated at `x`.
pub fn gaussian_at(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}
