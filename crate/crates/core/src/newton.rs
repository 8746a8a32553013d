//! Damped Newton iteration for the per-step minimisation of `J` on the
//! open set `Q` of strictly increasing positions.
//!
//! `J` is self-concordant with parameter `a = h min f0`, so the step length
//! is driven by the scaled Newton decrement
//! `lambda = sqrt(J'^T [J'']^{-1} J' / a)`.

use serde::{Deserialize, Serialize};

use crate::energy::{first_non_increasing, Objective, ObjectiveContext};
use crate::error::{Error, Result};
use crate::grid::EdgeFunction;

/// `lambda* = 2 - sqrt(3)`, below which full Newton steps are taken.
pub const LAMBDA_STAR: f64 = 0.267_949_192_431_122_8;

/// Halvings tried before a damped step is declared infeasible.
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonParams {
    /// Switch between the `1/lambda` and the middle damping branch, in
    /// `[lambda*, 1)`.
    pub lambda_prime: f64,
    pub decrement_tol: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            lambda_prime: LAMBDA_STAR,
            decrement_tol: 1e-8,
            residual_tol: 1e-10,
            max_iters: 100,
        }
    }
}

impl NewtonParams {
    pub fn validate(&self) -> Result<()> {
        if !(LAMBDA_STAR <= self.lambda_prime && self.lambda_prime < 1.0) {
            return Err(Error::InvalidInput(format!(
                "lambda_prime must lie in [2 - sqrt(3), 1), got {}",
                self.lambda_prime
            )));
        }
        if !(self.decrement_tol > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::InvalidInput(
                "Newton tolerances must be positive".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub final_decrement: f64,
    pub final_residual: f64,
    pub converged: bool,
    /// Set when the iteration stopped because a full step in the quadratic
    /// regime no longer lowered `J`, i.e. the round-off floor was reached
    /// before the tolerances.
    pub stagnated: bool,
    /// `(lambda, omega)` per accepted step, `omega` after any backtracking.
    pub damping_history: Vec<(f64, f64)>,
    /// Objective value at each iterate, starting from `x^n`.
    pub objective_history: Vec<f64>,
}

/// Step length `omega(lambda)`:
///
/// ```text
/// 1 / lambda                          lambda > lambda'
/// (1 - lambda) / (lambda (3 - lambda))  lambda* <= lambda <= lambda'
/// 1                                   lambda < lambda*
/// ```
pub fn damping_factor(lambda: f64, params: &NewtonParams) -> f64 {
    if lambda > params.lambda_prime {
        1.0 / lambda
    } else if lambda >= LAMBDA_STAR {
        (1.0 - lambda) / (lambda * (3.0 - lambda))
    } else {
        1.0
    }
}

struct Linearisation {
    /// Newton direction `-H^{-1} g` on the moving particles.
    direction: Vec<f64>,
    decrement: f64,
    residual: f64,
}

fn linearise(y: &[f64], ctx: &ObjectiveContext) -> Result<Linearisation> {
    if !(ctx.min_f0() > 0.0) {
        return Err(Error::InvalidInput(
            "Newton decrement needs a positive lower bound on f0 over the free range".into(),
        ));
    }
    let g = ctx.gradient_interior(y)?;
    let hess = ctx.hessian(y)?;
    let v = hess.solve(&g)?;
    let gv: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
    // (1/a) J'^T J''^{-1} J' with J' = h g, J'' = h H and a = h min f0
    let decrement = (gv.max(0.0) / ctx.min_f0()).sqrt();
    let residual = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(Linearisation {
        direction: v.into_iter().map(|d| -d).collect(),
        decrement,
        residual,
    })
}

/// Scaled Newton decrement of `J` at `y`.
pub fn newton_decrement(y: &EdgeFunction, ctx: &ObjectiveContext) -> Result<f64> {
    Ok(linearise(y.values(), ctx)?.decrement)
}

/// Runs the damped Newton iteration from `x^{n+1,0} = x^n` to the minimiser
/// of `J`, i.e. the next positions.
///
/// Every accepted iterate is strictly increasing on the free range. Damped
/// steps (`omega != 1`) are halved until the trial point is inside `Q` and
/// does not raise `J`; full steps are only checked for feasibility. A full
/// step that leaves `J` unchanged ends the iteration as converged.
pub fn solve_step(
    ctx: &ObjectiveContext,
    params: &NewtonParams,
) -> Result<(EdgeFunction, NewtonReport)> {
    params.validate()?;
    let free = ctx.free();
    let mut y = ctx.x_prev().to_vec();
    let mut trial = y.clone();
    let mut report = NewtonReport::default();
    let mut current = ctx.objective(&y).value();
    report.objective_history.push(current);

    loop {
        let lin = linearise(&y, ctx)?;
        report.final_decrement = lin.decrement;
        report.final_residual = lin.residual;
        if lin.decrement <= params.decrement_tol || lin.residual <= params.residual_tol {
            report.converged = true;
            break;
        }
        if report.iterations == params.max_iters {
            return Err(Error::NonConvergence(Box::new(report)));
        }

        let omega = damping_factor(lin.decrement, params);
        let damped = omega != 1.0;
        let mut step = omega;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            for (k, i) in free.interior().enumerate() {
                trial[i] = y[i] + step * lin.direction[k];
            }
            if first_non_increasing(&trial, free).is_none() {
                match ctx.objective(&trial) {
                    Objective::Finite(j)
                        if !damped || j <= current + 1e-12 * current.abs().max(1.0) =>
                    {
                        accepted = Some(j);
                        break;
                    }
                    _ => {}
                }
            }
            step *= 0.5;
        }
        let Some(j) = accepted else {
            return Err(Error::Infeasible {
                iteration: report.iterations,
            });
        };
        let flat = !damped && lin.decrement < LAMBDA_STAR && j >= current;
        std::mem::swap(&mut y, &mut trial);
        trial.copy_from_slice(&y);
        current = j;
        report.iterations += 1;
        report.damping_history.push((lin.decrement, step));
        report.objective_history.push(current);
        if flat {
            let lin = linearise(&y, ctx)?;
            report.final_decrement = lin.decrement;
            report.final_residual = lin.residual;
            report.converged = true;
            report.stagnated = true;
            break;
        }
    }

    Ok((EdgeFunction::new(y)?, report))
}
