//! Grid functions on the uniform Lagrangian grid `X_i = i h`, `h = 1/N`.
//!
//! Edge functions live on the `N + 1` nodes, cell functions on the `N`
//! half-nodes `X_{i-1/2}`. The inner products deliberately skip the two
//! endpoint nodes, which is what makes the summation-by-parts identity
//!
//! ```text
//! (D_h l | phi) = -[l | d_h phi] + l_N phi_{N-1/2} - l_0 phi_{1/2}
//! ```
//!
//! hold exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values at the grid nodes `X_0 .. X_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFunction {
    values: Vec<f64>,
    h: f64,
}

/// Values at the half nodes `X_{1/2} .. X_{N-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFunction {
    values: Vec<f64>,
    h: f64,
}

fn check_cells(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 cells, got {n}"
        )));
    }
    Ok(1.0 / n as f64)
}

impl EdgeFunction {
    /// Wraps `N + 1` nodal values; `h` is derived as `1/N`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let h = check_cells(values.len().saturating_sub(1))?;
        Ok(Self { values, h })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n + 1])
    }

    /// Samples `f` at every node `X_i = i/N`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = check_cells(n)?;
        let values = (0..=n).map(|i| f(node(i, n))).collect();
        Ok(Self { values, h })
    }

    /// The identity map `x_i = X_i`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| x)
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Returns `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_same(self.values.len(), other.values.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(Self { values, h: self.h })
    }
}

impl std::ops::Index<usize> for EdgeFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for EdgeFunction {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

impl CellFunction {
    /// Wraps `N` half-node values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let h = check_cells(values.len())?;
        Ok(Self { values, h })
    }

    /// Samples `f` at every half node `X_{i-1/2}`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = check_cells(n)?;
        let values = (1..=n).map(|i| f((i as f64 - 0.5) * h)).collect();
        Ok(Self { values, h })
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_same(self.values.len(), other.values.len())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Ok(Self { values, h: self.h })
    }
}

impl std::ops::Index<usize> for CellFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Node `X_i` of an `n`-cell grid. Exact at both ends.
pub fn node(i: usize, n: usize) -> f64 {
    if i == n {
        1.0
    } else {
        i as f64 / n as f64
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

fn check_spacing(a: f64, b: f64) -> Result<()> {
    if a != b {
        return Err(Error::SpacingMismatch(a, b));
    }
    Ok(())
}

/// `[l|g] = h * sum_{i=1}^{N-1} l_i g_i`.
pub fn inner_edge(l: &EdgeFunction, g: &EdgeFunction) -> Result<f64> {
    check_same(l.values.len(), g.values.len())?;
    check_spacing(l.h, g.h)?;
    let n = l.cells();
    let sum: f64 = (1..n).map(|i| l.values[i] * g.values[i]).sum();
    Ok(l.h * sum)
}

/// `(phi|psi) = h * sum_{i=1}^{N} phi_{i-1/2} psi_{i-1/2}`.
pub fn inner_cell(phi: &CellFunction, psi: &CellFunction) -> Result<f64> {
    check_same(phi.values.len(), psi.values.len())?;
    check_spacing(phi.h, psi.h)?;
    let sum: f64 = phi.values.iter().zip(&psi.values).map(|(a, b)| a * b).sum();
    Ok(phi.h * sum)
}

/// `(D_h l)_{i-1/2} = (l_i - l_{i-1}) / h`.
pub fn diff_edge_to_cell(l: &EdgeFunction) -> CellFunction {
    let values = l.values.windows(2).map(|w| (w[1] - w[0]) / l.h).collect();
    CellFunction { values, h: l.h }
}

/// `(d_h phi)_i = (phi_{i+1/2} - phi_{i-1/2}) / h` for `1 <= i <= N-1`.
///
/// The endpoint slots `i = 0` and `i = N` are not defined by the operator;
/// they are stored as zero and no formula reads them.
pub fn diff_cell_to_edge(phi: &CellFunction) -> EdgeFunction {
    let n = phi.cells();
    let mut values = vec![0.0; n + 1];
    for (v, w) in values[1..n].iter_mut().zip(phi.values.windows(2)) {
        *v = (w[1] - w[0]) / phi.h;
    }
    EdgeFunction { values, h: phi.h }
}

/// `(A l)_{i-1/2} = (l_i + l_{i-1}) / 2`.
pub fn average_edge_to_cell(l: &EdgeFunction) -> CellFunction {
    let values = l.values.windows(2).map(|w| 0.5 * (w[1] + w[0])).collect();
    CellFunction { values, h: l.h }
}
