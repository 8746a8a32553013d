//! Discrete energy and the per-step objective.
//!
//! The total energy splits into a convex part treated implicitly,
//!
//! ```text
//! E_c(x) = (A f0 | ln(A f0 / D_h x)),
//! ```
//!
//! and a concave part `-E_e(x) = [f0 | ln(x(1-x))]` treated explicitly.
//! The selection contribution `-4 N_e s [f0 | x]` is linear and rides with
//! the explicit part. One time step minimises
//!
//! ```text
//! J(y) = 1/(2 tau) [w (y - x^n) | (y - x^n)] + E_c(y) + [c | y]
//! w = f0 / (x^n (1 - x^n)),   c = f0 (1 - 2 x^n) / (x^n (1 - x^n)) - 4 s N_e f0
//! ```
//!
//! over positions that are strictly increasing on the free range. Every sum
//! is restricted to the free range `[i_s, i_e]`; frozen particles contribute
//! nothing.
//!
//! Gradients and Hessians here are taken with respect to the `[.|.]` inner
//! product, i.e. they are the plain partial derivatives divided by `h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::EdgeFunction;
use crate::problem::ProblemSpec;
use crate::tridiag::TridiagonalMatrix;

/// Indices `(i_s, i_e)` of the first and last particle that still take part
/// in the solve. Particles `i_s` and `i_e` sit at 0 and 1; only the ones
/// strictly between them move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeRange {
    pub start: usize,
    pub end: usize,
}

impl FreeRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn full(n: usize) -> Self {
        Self { start: 0, end: n }
    }

    /// Number of moving particles, `i_e - i_s - 1`.
    pub fn interior_len(&self) -> usize {
        self.end.saturating_sub(self.start + 1)
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        self.start + 1..self.end.max(self.start + 1)
    }

    /// Cells `c` (between nodes `c - 1` and `c`) touching the free range.
    pub fn cells(&self) -> std::ops::RangeInclusive<usize> {
        self.start + 1..=self.end
    }
}

/// Objective value, with the boundary of the feasible set kept distinct
/// from large finite values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Finite(f64),
    /// Some spacing on the free range is `<= 0`: `J = +inf`.
    Infeasible,
}

impl Objective {
    /// Saturating numeric value: `f64::MAX` when infeasible.
    pub fn value(self) -> f64 {
        match self {
            Objective::Finite(v) => v,
            Objective::Infeasible => f64::MAX,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Objective::Finite(_))
    }
}

/// First index on the free range where `x` fails to increase strictly.
pub fn first_non_increasing(x: &[f64], free: FreeRange) -> Option<usize> {
    free.cells().find(|&c| !(x[c] > x[c - 1]))
}

fn check_range(len: usize, free: FreeRange) -> Result<()> {
    if free.start >= free.end || free.end >= len {
        return Err(Error::InvalidInput(format!(
            "free range ({}, {}) does not fit a grid with {} nodes",
            free.start, free.end, len
        )));
    }
    Ok(())
}

/// `A f0` on the cells of the free range, indexed by cell number.
fn averaged(f0: &[f64], c: usize) -> f64 {
    0.5 * (f0[c] + f0[c - 1])
}

/// `b (ln b - ln D)`, with the `0 ln 0 = 0` convention.
fn entropy_term(b: f64, spacing: f64, h: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        b * (b.ln() - (spacing / h).ln())
    }
}

/// Convex part `E_c(x) = (A f0 | ln(A f0 / D_h x))` over the free range.
pub fn energy_convex(x: &EdgeFunction, spec: &ProblemSpec, free: FreeRange) -> Result<f64> {
    check_q(x, spec, free)?;
    Ok(convex_sum(x.values(), spec.f0.values(), x.h(), free))
}

fn convex_sum(x: &[f64], f0: &[f64], h: f64, free: FreeRange) -> f64 {
    let sum: f64 = free
        .cells()
        .map(|c| entropy_term(averaged(f0, c), x[c] - x[c - 1], h))
        .sum();
    h * sum
}

/// Explicit part `E_e(x) = -[f0 | ln(x(1-x))] + 4 N_e s [f0 | x]`, so that
/// the total energy is `E_c - E_e`.
pub fn energy_explicit(x: &EdgeFunction, spec: &ProblemSpec, free: FreeRange) -> Result<f64> {
    check_q(x, spec, free)?;
    Ok(explicit_sum(x.values(), spec, free))
}

fn explicit_sum(x: &[f64], spec: &ProblemSpec, free: FreeRange) -> f64 {
    let f0 = spec.f0.values();
    let sel = spec.selection_drift();
    let sum: f64 = free
        .interior()
        .map(|i| -f0[i] * (x[i] * (1.0 - x[i])).ln() + sel * f0[i] * x[i])
        .sum();
    spec.h() * sum
}

fn check_q(x: &EdgeFunction, spec: &ProblemSpec, free: FreeRange) -> Result<()> {
    if x.values().len() != spec.f0.values().len() {
        return Err(Error::LengthMismatch {
            expected: spec.f0.values().len(),
            found: x.values().len(),
        });
    }
    check_range(x.values().len(), free)?;
    if let Some(index) = first_non_increasing(x.values(), free) {
        return Err(Error::OutsideQ { index });
    }
    let v = x.values();
    if let Some(index) = free.interior().find(|&i| !(v[i] > 0.0 && v[i] < 1.0)) {
        return Err(Error::OutsideQ { index });
    }
    Ok(())
}

/// Discrete total energy
/// `E_N(x) = (A f0 | ln(A f0 / D_h x)) + [f0 | ln(x(1-x))] - 4 N_e s [f0 | x]`
/// restricted to the free range.
pub fn discrete_energy(x: &EdgeFunction, spec: &ProblemSpec, free: FreeRange) -> Result<f64> {
    check_q(x, spec, free)?;
    let v = x.values();
    Ok(convex_sum(v, spec.f0.values(), x.h(), free) - explicit_sum(v, spec, free))
}

/// Everything one time step needs to evaluate `J`, precomputed from the
/// previous positions.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    h: f64,
    tau: f64,
    free: FreeRange,
    x_prev: Vec<f64>,
    /// `A f0` per cell, indexed by cell number.
    cell_weight: Vec<f64>,
    /// `f0 / (x^n (1 - x^n))` per node.
    mobility: Vec<f64>,
    /// `f0 (1 - 2x^n) / (x^n (1 - x^n)) - 4 s N_e f0` per node.
    drift: Vec<f64>,
    min_f0: f64,
}

impl ObjectiveContext {
    pub fn new(
        spec: &ProblemSpec,
        x_prev: &EdgeFunction,
        tau: f64,
        free: FreeRange,
    ) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {tau}"
            )));
        }
        check_q(x_prev, spec, free)?;
        let f0 = spec.f0.values();
        let x = x_prev.values();
        let n1 = x.len();
        let sel = spec.selection_drift();

        let mut cell_weight = vec![0.0; n1];
        for c in free.cells() {
            cell_weight[c] = averaged(f0, c);
        }
        let mut mobility = vec![0.0; n1];
        let mut drift = vec![0.0; n1];
        for i in free.interior() {
            let xx = x[i] * (1.0 - x[i]);
            mobility[i] = f0[i] / xx;
            drift[i] = f0[i] * (1.0 - 2.0 * x[i]) / xx - sel * f0[i];
        }
        let min_f0 = free
            .interior()
            .chain([free.start, free.end])
            .map(|i| f0[i])
            .fold(f64::INFINITY, f64::min);

        Ok(Self {
            h: spec.h(),
            tau,
            free,
            x_prev: x.to_vec(),
            cell_weight,
            mobility,
            drift,
            min_f0,
        })
    }

    pub fn free(&self) -> FreeRange {
        self.free
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    /// `min f0` over the free range; the self-concordance parameter is
    /// `a = h * min f0`.
    pub fn min_f0(&self) -> f64 {
        self.min_f0
    }

    pub fn mobility(&self) -> &[f64] {
        &self.mobility
    }

    pub fn objective(&self, y: &[f64]) -> Objective {
        if first_non_increasing(y, self.free).is_some() {
            return Objective::Infeasible;
        }
        let h = self.h;
        let mut quad = 0.0;
        let mut linear = 0.0;
        for i in self.free.interior() {
            let d = y[i] - self.x_prev[i];
            quad += self.mobility[i] * d * d;
            linear += self.drift[i] * y[i];
        }
        let entropy: f64 = self
            .free
            .cells()
            .map(|c| entropy_term(self.cell_weight[c], y[c] - y[c - 1], h))
            .sum();
        Objective::Finite(h * (0.5 * quad / self.tau + entropy + linear))
    }

    /// `A f0 / D_h y` on cell `c`.
    fn flux(&self, y: &[f64], c: usize) -> f64 {
        self.cell_weight[c] * self.h / (y[c] - y[c - 1])
    }

    /// Gradient on the moving particles, in free-interior order.
    pub fn gradient_interior(&self, y: &[f64]) -> Result<Vec<f64>> {
        if let Some(index) = first_non_increasing(y, self.free) {
            return Err(Error::OutsideQ { index });
        }
        Ok(self
            .free
            .interior()
            .map(|i| {
                self.mobility[i] * (y[i] - self.x_prev[i]) / self.tau
                    + (self.flux(y, i + 1) - self.flux(y, i)) / self.h
                    + self.drift[i]
            })
            .collect())
    }

    /// Hessian on the moving particles: `diag(w / tau)` plus the second
    /// difference weighted by `A f0 / (D_h y)^2`.
    pub fn hessian(&self, y: &[f64]) -> Result<TridiagonalMatrix> {
        if let Some(index) = first_non_increasing(y, self.free) {
            return Err(Error::OutsideQ { index });
        }
        // A f0 / (h^2 (D_h y)^2) = A f0 / (y_c - y_{c-1})^2
        let stiff = |c: usize| {
            let dy = y[c] - y[c - 1];
            self.cell_weight[c] / (dy * dy)
        };
        let diag = self
            .free
            .interior()
            .map(|i| self.mobility[i] / self.tau + stiff(i) + stiff(i + 1))
            .collect();
        let off = self.free.interior().skip(1).map(|i| -stiff(i)).collect();
        TridiagonalMatrix::new(diag, off)
    }
}

/// `J(y)` for the step described by `ctx`.
pub fn objective(y: &EdgeFunction, ctx: &ObjectiveContext) -> Objective {
    ctx.objective(y.values())
}

/// Gradient of `J` as an edge function, zero outside the moving particles.
/// A root in `Q` is exactly a solution of the fully discrete scheme.
pub fn objective_gradient(y: &EdgeFunction, ctx: &ObjectiveContext) -> Result<EdgeFunction> {
    let interior = ctx.gradient_interior(y.values())?;
    let mut g = EdgeFunction::zeros(y.cells())?;
    for (i, v) in ctx.free.interior().zip(interior) {
        g[i] = v;
    }
    Ok(g)
}

pub fn objective_hessian(y: &EdgeFunction, ctx: &ObjectiveContext) -> Result<TridiagonalMatrix> {
    ctx.hessian(y.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::uniform;

    fn three_point() -> (ProblemSpec, EdgeFunction) {
        let spec = ProblemSpec::pure_drift(uniform(2).unwrap()).unwrap();
        let x = EdgeFunction::identity(2).unwrap();
        (spec, x)
    }

    #[test]
    fn energy_of_uniform_identity() {
        let spec = ProblemSpec::pure_drift(uniform(4).unwrap()).unwrap();
        let x = EdgeFunction::identity(4).unwrap();
        let free = FreeRange::full(4);
        let e = discrete_energy(&x, &spec, free).unwrap();
        assert!((e - (-1.1835618070658085)).abs() < 1e-14, "{e}");
        assert_eq!(energy_convex(&x, &spec, free).unwrap(), 0.0);
    }

    #[test]
    fn zero_selection_matches_pure_drift() {
        let x = EdgeFunction::identity(6).unwrap();
        let drift = ProblemSpec::pure_drift(uniform(6).unwrap()).unwrap();
        let sel = ProblemSpec::with_selection(uniform(6).unwrap(), 0.0, 1e4).unwrap();
        let free = FreeRange::full(6);
        assert_eq!(
            discrete_energy(&x, &drift, free).unwrap(),
            discrete_energy(&x, &sel, free).unwrap()
        );
    }

    #[test]
    fn non_monotone_energy_is_domain_error() {
        let spec = ProblemSpec::pure_drift(uniform(3).unwrap()).unwrap();
        let x = EdgeFunction::new(vec![0.0, 0.5, 0.4, 1.0]).unwrap();
        assert!(matches!(
            discrete_energy(&x, &spec, FreeRange::full(3)),
            Err(Error::OutsideQ { index: 2 })
        ));
    }

    #[test]
    fn objective_examples() {
        let (spec, x) = three_point();
        let ctx = ObjectiveContext::new(&spec, &x, 1.0, FreeRange::full(2)).unwrap();
        assert_eq!(objective(&x, &ctx), Objective::Finite(0.0));

        let y = EdgeFunction::new(vec![0.0, 0.6, 1.0]).unwrap();
        let j = objective(&y, &ctx).value();
        assert!((j - 0.030410997260127588).abs() < 1e-15, "{j}");

        let pinched = EdgeFunction::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(objective(&pinched, &ctx), Objective::Infeasible);
        assert_eq!(Objective::Infeasible.value(), f64::MAX);
    }

    #[test]
    fn gradient_and_hessian_examples() {
        let (spec, x) = three_point();
        let ctx = ObjectiveContext::new(&spec, &x, 1.0, FreeRange::full(2)).unwrap();
        let g = objective_gradient(&x, &ctx).unwrap();
        assert!(g.values().iter().all(|v| v.abs() < 1e-15));
        let hess = objective_hessian(&x, &ctx).unwrap();
        assert_eq!(hess.dim(), 1);
        assert!((hess.diag()[0] - 12.0).abs() < 1e-13);

        let y = EdgeFunction::new(vec![0.0, 0.6, 1.0]).unwrap();
        let g = objective_gradient(&y, &ctx).unwrap();
        assert!((g[1] - 1.2333333333333334).abs() < 1e-14);
        let hess = objective_hessian(&y, &ctx).unwrap();
        assert!((hess.diag()[0] - 13.027777777777777).abs() < 1e-12);
    }

    #[test]
    fn gradient_at_previous_positions_drops_quadratic_term() {
        let f0 = crate::problem::polynomial_sine(6).unwrap();
        let spec = ProblemSpec::with_selection(f0, 1e-4, 1e4).unwrap();
        let x = EdgeFunction::identity(6).unwrap();
        let ctx = ObjectiveContext::new(&spec, &x, 0.3, FreeRange::full(6)).unwrap();
        let g = objective_gradient(&x, &ctx).unwrap();
        let f = spec.f0.values();
        let h = spec.h();
        for i in 1..6 {
            let xi = x[i];
            let flux = |c: usize| 0.5 * (f[c] + f[c - 1]) / ((x[c] - x[c - 1]) / h);
            let want = (flux(i + 1) - flux(i)) / h + f[i] * (1.0 - 2.0 * xi) / (xi * (1.0 - xi))
                - 4.0 * 1e-4 * 1e4 * f[i];
            assert!((g[i] - want).abs() < 1e-12, "{i}: {} vs {want}", g[i]);
        }
    }

    #[test]
    fn restricted_free_range_ignores_frozen_particles() {
        let spec = ProblemSpec::pure_drift(uniform(5).unwrap()).unwrap();
        // particles 0, 1 frozen at 0; particle 5 at 1
        let x = EdgeFunction::new(vec![0.0, 0.0, 0.3, 0.5, 0.8, 1.0]).unwrap();
        let free = FreeRange::new(1, 5);
        assert!(discrete_energy(&x, &spec, free).is_ok());
        assert!(discrete_energy(&x, &spec, FreeRange::full(5)).is_err());
        let ctx = ObjectiveContext::new(&spec, &x, 0.1, free).unwrap();
        assert_eq!(ctx.hessian(x.values()).unwrap().dim(), 3);
        let g = objective_gradient(&x, &ctx).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[5], 0.0);
    }
}
