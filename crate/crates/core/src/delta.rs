//! Dirac-delta initial data.
//!
//! The delta is approximated by a narrow Gaussian and split into two
//! positive problems, `f = w - g` with `g(x, 0) = offset` and
//! `w(x, 0) = offset + N(x0, sigma^2)`. Both are stepped in lockstep on the
//! same grid; at every output time the `g` masses are carried onto the
//! `w` particles by a mass-conserving interpolation and subtracted.

use serde::{Deserialize, Serialize};

use crate::energy::FreeRange;
use crate::error::{Error, Result};
use crate::grid::EdgeFunction;
use crate::problem::{gaussian_at, ProblemSpec};
use crate::stepper::{
    density_from_masses, DensityField, Diagnostics, NewtonStats, ParticleState, Simulation,
    SolverParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaSpec {
    /// Initial allele frequency.
    pub x0: f64,
    pub sigma: f64,
    /// Constant lift shared by both positive sub-problems.
    pub offset: f64,
}

impl Default for DeltaSpec {
    fn default() -> Self {
        Self {
            x0: 0.5,
            sigma: 0.01,
            offset: 10.0,
        }
    }
}

impl DeltaSpec {
    pub fn new(x0: f64) -> Self {
        Self {
            x0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0 && self.x0 < 1.0) {
            return Err(Error::InvalidInput(format!(
                "x0 must lie in (0, 1), got {}",
                self.x0
            )));
        }
        if !(self.sigma > 0.0) || !(self.offset > 0.0) {
            return Err(Error::InvalidInput(
                "sigma and offset must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Initial densities `(g0, w0)` on an `n`-cell grid. The Gaussian samples
    /// are scaled so that their trapezoid mass is exactly one.
    pub fn initial_pair(&self, n: usize) -> Result<(EdgeFunction, EdgeFunction)> {
        self.validate()?;
        let bump = EdgeFunction::from_fn(n, |x| gaussian_at(x, self.x0, self.sigma))?;
        let h = bump.h();
        let v = bump.values();
        let mass = h * (v[1..n].iter().sum::<f64>() + 0.5 * (v[0] + v[n]));
        let g0 = EdgeFunction::from_fn(n, |_| self.offset)?;
        let w0 = EdgeFunction::new(v.iter().map(|b| self.offset + b / mass).collect())?;
        Ok((g0, w0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationResult {
    /// Mass re-assigned to every target particle (length `N + 1`).
    pub target_masses: Vec<f64>,
    /// Density of the transferred masses on the target free range.
    pub target_density: DensityField,
    pub free_range: FreeRange,
}

/// Control-volume boundaries of the free particles: `x_s`, the midpoints
/// between neighbours, and `x_e`.
fn control_knots(x: &[f64], free: FreeRange) -> Vec<f64> {
    let (s, e) = (free.start, free.end);
    let mut knots = Vec::with_capacity(e - s + 2);
    knots.push(x[s]);
    for i in s..e {
        knots.push(0.5 * (x[i] + x[i + 1]));
    }
    knots.push(x[e]);
    knots
}

/// Re-assigns the masses of `source` onto the particles of `target`.
///
/// Free masses are spread as a piecewise-constant density over the source
/// control volumes and integrated exactly over the target control volumes.
/// The integration goes through the cumulative mass, so the transferred
/// free mass telescopes to the source total. Mass bundled at a boundary is
/// copied particle by particle when both sides bundled the same number of
/// particles, shared equally among the target's bundled particles
/// otherwise, and kept on the boundary super-particle when the target has
/// none bundled yet.
pub fn mass_interpolate(
    source: &ParticleState,
    target: &ParticleState,
    eps0: f64,
) -> Result<InterpolationResult> {
    let n1 = source.m0.len();
    if target.x.values().len() != n1 || source.x.values().len() != n1 {
        return Err(Error::LengthMismatch {
            expected: n1,
            found: target.x.values().len(),
        });
    }
    let xs = source.x.values();
    let ys = target.x.values();
    let sf = source.free;
    let tf = target.free;

    let src_knots = control_knots(xs, sf);
    let mut cumulative = Vec::with_capacity(src_knots.len());
    cumulative.push(0.0);
    let mut acc = 0.0;
    for i in sf.start..=sf.end {
        acc += source.m0[i];
        cumulative.push(acc);
    }
    let free_total = acc;

    // cumulative free mass at position p, knots visited in increasing order
    let mut cell = 0;
    let mut cumulative_at = |p: f64| -> f64 {
        let last = src_knots.len() - 1;
        if p <= src_knots[0] {
            return 0.0;
        }
        if p >= src_knots[last] {
            return free_total;
        }
        while cell + 1 < last && src_knots[cell + 1] <= p {
            cell += 1;
        }
        let (a, b) = (src_knots[cell], src_knots[cell + 1]);
        let (ca, cb) = (cumulative[cell], cumulative[cell + 1]);
        if p == a {
            ca
        } else {
            ca + (cb - ca) * ((p - a) / (b - a))
        }
    };

    let tgt_knots = control_knots(ys, tf);
    let mut own = vec![0.0; n1];
    let mut prev = 0.0;
    for (k, j) in (tf.start..=tf.end).enumerate() {
        let next = if k + 1 == tgt_knots.len() - 1 {
            free_total
        } else {
            cumulative_at(tgt_knots[k + 1])
        };
        own[j] = next - prev;
        prev = next;
    }

    let left = source.bundled_left();
    let right = source.bundled_right();
    let mut target_masses = own.clone();
    distribute(&mut target_masses[..tf.start], &source.m0[..sf.start], left);
    distribute(
        &mut target_masses[tf.end + 1..],
        &source.m0[sf.end + 1..],
        right,
    );
    if tf.start == 0 {
        target_masses[0] += left;
    }
    if tf.end == n1 - 1 {
        target_masses[n1 - 1] += right;
    }

    let target_density = density_from_masses(ys, &own, tf, (left, right), eps0);
    Ok(InterpolationResult {
        target_masses,
        target_density,
        free_range: tf,
    })
}

fn distribute(target: &mut [f64], source: &[f64], total: f64) {
    if target.is_empty() {
        return;
    }
    if target.len() == source.len() {
        target.copy_from_slice(source);
    } else {
        let share = total / target.len() as f64;
        target.iter_mut().for_each(|m| *m = share);
    }
}

/// `minuend - subtrahend` on a common set of positions and free range.
pub fn signed_difference(
    minuend: &DensityField,
    subtrahend: &DensityField,
) -> Result<DensityField> {
    if minuend.free != subtrahend.free || minuend.positions != subtrahend.positions {
        return Err(Error::InvalidInput(
            "fields must share positions and free range to be subtracted".into(),
        ));
    }
    let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u - v).collect::<Vec<_>>();
    Ok(DensityField {
        positions: minuend.positions.clone(),
        density: sub(&minuend.density, &subtrahend.density),
        masses: sub(&minuend.masses, &subtrahend.masses),
        free: minuend.free,
        bundled: (
            minuend.bundled.0 - subtrahend.bundled.0,
            minuend.bundled.1 - subtrahend.bundled.1,
        ),
        eps0: minuend.eps0,
    })
}

/// Density with negative values of magnitude at most `rel * max|f|` set to
/// zero, and the number of entries changed.
pub fn clamp_dust(field: &DensityField, rel: f64) -> (Vec<f64>, usize) {
    let scale = field.density.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut clamped = 0;
    let out = field
        .density
        .iter()
        .map(|&v| {
            if v < 0.0 && -v <= rel * scale {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    (out, clamped)
}

/// Relative size of negative density dust removed in reports.
pub const DUST_TOLERANCE: f64 = 1e-6;

/// Signed solution at one output time.
#[derive(Debug, Clone)]
pub struct DeltaSnapshot {
    /// `f = W - G` on the `w` particles, masses signed.
    pub field: DensityField,
    /// Total probability, expectation, boundary densities and
    /// probabilities `P_l`, `P_r`; energy is `NaN`.
    pub diagnostics: Diagnostics,
    pub g_diagnostics: Diagnostics,
    pub w_diagnostics: Diagnostics,
}

impl DeltaSnapshot {
    pub fn time(&self) -> f64 {
        self.diagnostics.time
    }

    pub fn total_probability(&self) -> f64 {
        self.diagnostics.total_mass
    }

    pub fn expectation(&self) -> f64 {
        self.diagnostics.barycenter
    }

    pub fn p_left(&self) -> f64 {
        self.diagnostics.mass_left
    }

    pub fn p_right(&self) -> f64 {
        self.diagnostics.mass_right
    }
}

/// Both sub-runs of a split problem, stepped in lockstep.
#[derive(Debug, Clone)]
pub struct SplitRun {
    g: Simulation,
    w: Simulation,
    g_stats: NewtonStats,
    w_stats: NewtonStats,
}

impl SplitRun {
    pub fn new(
        delta: &DeltaSpec,
        n: usize,
        selection: Option<(f64, f64)>,
        solver: SolverParams,
    ) -> Result<Self> {
        let (g0, w0) = delta.initial_pair(n)?;
        let make = |f0| match selection {
            Some((s, ne)) => ProblemSpec::with_selection(f0, s, ne),
            None => ProblemSpec::pure_drift(f0),
        };
        Ok(Self {
            g: Simulation::new(make(g0)?, solver)?,
            w: Simulation::new(make(w0)?, solver)?,
            g_stats: NewtonStats::default(),
            w_stats: NewtonStats::default(),
        })
    }

    pub fn g(&self) -> &Simulation {
        &self.g
    }

    pub fn w(&self) -> &Simulation {
        &self.w
    }

    /// Newton statistics of the `g` and `w` runs so far.
    pub fn newton_stats(&self) -> (NewtonStats, NewtonStats) {
        (self.g_stats, self.w_stats)
    }

    /// Advances both runs to `target` steps. The two runs are independent
    /// until then and are stepped on separate threads.
    pub fn run_to_step(&mut self, target: usize) -> Result<()> {
        let (g, w) = (&mut self.g, &mut self.w);
        let (gs, ws) = (&mut self.g_stats, &mut self.w_stats);
        let (rg, rw) = std::thread::scope(|scope| {
            let hg = scope.spawn(|| g.run_to_step(target, |_, rec| gs.record(&rec.newton)));
            let rw = w.run_to_step(target, |_, rec| ws.record(&rec.newton));
            (hg.join().expect("g sub-run panicked"), rw)
        });
        rg.map_err(|e| Error::SubProblem {
            problem: "g",
            source: Box::new(e),
        })?;
        rw.map_err(|e| Error::SubProblem {
            problem: "w",
            source: Box::new(e),
        })?;
        Ok(())
    }

    /// `f = W - G` on the current `w` particles.
    pub fn snapshot(&self, time: f64) -> Result<DeltaSnapshot> {
        let eps0 = self.w.solver().eps0;
        let w_field = self.w.field();
        let g_on_w = mass_interpolate(self.g.state(), self.w.state(), eps0)?;
        let field = signed_difference(&w_field, &g_on_w.target_density)?;
        let diagnostics = Diagnostics::from_field(&field, time, f64::NAN);
        Ok(DeltaSnapshot {
            field,
            diagnostics,
            g_diagnostics: self.g.diagnostics()?,
            w_diagnostics: self.w.diagnostics()?,
        })
    }

    /// Snapshots at each of `output_times` (increasing).
    pub fn run(&mut self, output_times: &[f64]) -> Result<Vec<DeltaSnapshot>> {
        check_times(output_times)?;
        let mut out = Vec::with_capacity(output_times.len());
        for &t in output_times {
            let target = self.w.steps_to(t);
            self.run_to_step(target)?;
            out.push(self.snapshot(t)?);
        }
        Ok(out)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
        || times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidInput(
            "output times must be non-negative and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Pure drift from `delta(x - x0)`.
pub fn solve_delta(
    delta: &DeltaSpec,
    n: usize,
    solver: SolverParams,
    output_times: &[f64],
) -> Result<Vec<DeltaSnapshot>> {
    SplitRun::new(delta, n, None, solver)?.run(output_times)
}

/// Drift with semi-dominant selection from `delta(x - x0)`.
pub fn solve_selection(
    delta: &DeltaSpec,
    s: f64,
    ne: f64,
    n: usize,
    solver: SolverParams,
    output_times: &[f64],
) -> Result<Vec<DeltaSnapshot>> {
    check_selection(s, ne)?;
    SplitRun::new(delta, n, Some((s, ne)), solver)?.run(output_times)
}

pub fn check_selection(s: f64, ne: f64) -> Result<()> {
    if !(s.abs() <= 0.01) {
        return Err(Error::InvalidInput(format!(
            "|s| must not exceed 0.01, got {s}"
        )));
    }
    if !(ne > 0.0) || !ne.is_finite() {
        return Err(Error::InvalidInput(format!(
            "N_e must be positive, got {ne}"
        )));
    }
    Ok(())
}

/// Probability of ultimate fixation
/// `P_fix(x0) = (1 - exp(-4 x0 s N_e)) / (1 - exp(-4 s N_e))`.
pub fn p_fix(x0: f64, s: f64, ne: f64) -> f64 {
    let z = 4.0 * s * ne;
    if z.abs() < 1e-8 {
        // second-order expansion around neutrality
        x0 + 0.5 * z * x0 * (1.0 - x0)
    } else {
        (-z * x0).exp_m1() / (-z).exp_m1()
    }
}
