//! Time stepping: one Newton solve per step, then boundary fixation and
//! density recovery.
//!
//! Particles that come within `eps0` of an end point are snapped onto it and
//! frozen for the rest of the run. All particles at 0 form a single
//! boundary "super-particle" whose density is
//!
//! ```text
//! f_{i_s} = (2 / eps0) sum_{k < i_s} m_k + m_{i_s} / ((x_{i_s+1} - x_{i_s}) / 2)
//! ```
//!
//! and symmetrically at 1. Before any fixation the first sum is empty and
//! the formula reduces to the one-sided boundary density.

use serde::{Deserialize, Serialize};

use crate::energy::{discrete_energy, FreeRange, ObjectiveContext};
use crate::error::{Error, Result};
use crate::grid::EdgeFunction;
use crate::newton::{solve_step, NewtonParams, NewtonReport};
use crate::problem::ProblemSpec;

/// Default fixation band width.
pub const DEFAULT_EPS0: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tau: f64,
    pub eps0: f64,
    pub newton: NewtonParams,
}

impl SolverParams {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            eps0: DEFAULT_EPS0,
            newton: NewtonParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.5) {
            return Err(Error::InvalidInput(format!(
                "eps0 must lie in (0, 0.5), got {}",
                self.eps0
            )));
        }
        self.newton.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    /// Particle positions; `x[..=i_s] = 0` and `x[i_e..] = 1`.
    pub x: EdgeFunction,
    /// Mass carried by each particle, fixed at `t = 0`.
    pub m0: Vec<f64>,
    pub free: FreeRange,
    pub t: f64,
    pub step_count: usize,
}

impl ParticleState {
    pub fn total_mass(&self) -> f64 {
        self.m0.iter().sum()
    }

    /// No particle is left between the two boundary super-particles.
    pub fn is_fully_fixated(&self) -> bool {
        self.free.interior_len() == 0
    }

    /// Mass of the particles bundled below `i_s`.
    pub fn bundled_left(&self) -> f64 {
        self.m0[..self.free.start].iter().sum()
    }

    /// Mass of the particles bundled above `i_e`.
    pub fn bundled_right(&self) -> f64 {
        self.m0[self.free.end + 1..].iter().sum()
    }
}

/// Identity positions and the trapezoid masses `m_i = h f0(X_i)` with half
/// weights at both ends.
pub fn init_state(spec: &ProblemSpec) -> Result<ParticleState> {
    spec.validate()?;
    let n = spec.cells();
    let h = spec.h();
    let m0 = spec
        .f0
        .values()
        .iter()
        .enumerate()
        .map(|(i, f)| if i == 0 || i == n { 0.5 * h * f } else { h * f })
        .collect();
    Ok(ParticleState {
        x: EdgeFunction::identity(n)?,
        m0,
        free: FreeRange::full(n),
        t: 0.0,
        step_count: 0,
    })
}

/// Snaps particles inside `[0, eps0]` to 0 and inside `[1 - eps0, 1]` to 1,
/// then moves the free range inward past them.
///
/// Frozen particles stay frozen: the new range is never wider than the old
/// one. Time and step count are carried over unchanged.
pub fn apply_fixation(x_new: EdgeFunction, state: &ParticleState, eps0: f64) -> ParticleState {
    let mut x = x_new;
    let old = state.free;
    let mut start = old.start;
    let mut end = old.end;
    {
        let v = x.values_mut();
        for i in old.interior() {
            if v[i] <= eps0 {
                v[i] = 0.0;
                start = start.max(i);
            } else if v[i] >= 1.0 - eps0 {
                v[i] = 1.0;
                end = end.min(i);
            }
        }
        for item in v.iter_mut().take(start + 1) {
            *item = 0.0;
        }
        for item in v.iter_mut().skip(end) {
            *item = 1.0;
        }
    }
    ParticleState {
        x,
        m0: state.m0.clone(),
        free: FreeRange::new(start, end),
        t: state.t,
        step_count: state.step_count,
    }
}

/// Density and mass on the free range `[i_s, i_e]`.
///
/// Entry `k` corresponds to particle `free.start + k`. The first and last
/// entries are the boundary super-particles: their mass includes everything
/// bundled at that end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub positions: Vec<f64>,
    pub density: Vec<f64>,
    pub masses: Vec<f64>,
    pub free: FreeRange,
    /// Mass of the particles bundled strictly beyond `i_s` and `i_e`.
    pub bundled: (f64, f64),
    pub eps0: f64,
}

impl DensityField {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Particle index of entry `k`.
    pub fn index(&self, k: usize) -> usize {
        self.free.start + k
    }

    /// Mass carried by each entry, rebuilt from the density alone: interior
    /// entries over their control volume, boundary entries as the `eps0/2`
    /// spike plus their own half cell.
    pub fn masses_from_density(&self) -> Vec<f64> {
        let x = &self.positions;
        let f = &self.density;
        let last = x.len() - 1;
        (0..=last)
            .map(|k| {
                if k == 0 {
                    let spike = 2.0 * self.bundled.0 / self.eps0;
                    self.bundled.0 + (f[0] - spike) * 0.5 * (x[1] - x[0])
                } else if k == last {
                    let spike = 2.0 * self.bundled.1 / self.eps0;
                    self.bundled.1 + (f[last] - spike) * 0.5 * (x[last] - x[last - 1])
                } else {
                    f[k] * 0.5 * (x[k + 1] - x[k - 1])
                }
            })
            .collect()
    }
}

/// Recovers density from per-particle masses on `positions`.
///
/// `own` holds each particle's own mass over the whole grid; `bundled` is
/// the mass already accumulated beyond the free range at each end.
pub fn density_from_masses(
    positions: &[f64],
    own: &[f64],
    free: FreeRange,
    bundled: (f64, f64),
    eps0: f64,
) -> DensityField {
    let (s, e) = (free.start, free.end);
    let x = positions;
    let mut density = Vec::with_capacity(e - s + 1);
    let mut masses = Vec::with_capacity(e - s + 1);
    for i in s..=e {
        if i == s {
            density.push(2.0 * bundled.0 / eps0 + own[i] / (0.5 * (x[i + 1] - x[i])));
            masses.push(bundled.0 + own[i]);
        } else if i == e {
            density.push(2.0 * bundled.1 / eps0 + own[i] / (0.5 * (x[i] - x[i - 1])));
            masses.push(bundled.1 + own[i]);
        } else {
            density.push(own[i] / (0.5 * (x[i + 1] - x[i - 1])));
            masses.push(own[i]);
        }
    }
    DensityField {
        positions: x[s..=e].to_vec(),
        density,
        masses,
        free,
        bundled,
        eps0,
    }
}

pub fn recover_density(state: &ParticleState, eps0: f64) -> DensityField {
    density_from_masses(
        state.x.values(),
        &state.m0,
        state.free,
        (state.bundled_left(), state.bundled_right()),
        eps0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    pub total_mass: f64,
    /// First moment normalised by total mass.
    pub barycenter: f64,
    /// Discrete energy on the current free range; `NaN` where no single
    /// energy applies (signed delta solutions).
    pub energy: f64,
    pub f_left: f64,
    pub f_right: f64,
    pub mass_left: f64,
    pub mass_right: f64,
}

impl Diagnostics {
    /// Diagnostics that depend only on a density field.
    pub fn from_field(field: &DensityField, time: f64, energy: f64) -> Self {
        let total: f64 = field.total_mass();
        let moment: f64 = field
            .masses
            .iter()
            .zip(&field.positions)
            .map(|(m, x)| m * x)
            .sum();
        let last = field.len() - 1;
        Self {
            time,
            total_mass: total,
            barycenter: moment / total,
            energy,
            f_left: field.density[0],
            f_right: field.density[last],
            mass_left: field.masses[0],
            mass_right: field.masses[last],
        }
    }
}

pub fn compute_diagnostics(
    field: &DensityField,
    state: &ParticleState,
    spec: &ProblemSpec,
) -> Result<Diagnostics> {
    let energy = discrete_energy(&state.x, spec, state.free)?;
    Ok(Diagnostics::from_field(field, state.t, energy))
}

/// What one time step did, beyond the new state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// `E_N(x^n)` on the free range the step solved over.
    pub energy_before: f64,
    /// `E_N(x^{n+1})` on the same range, before snapping.
    pub energy_after: f64,
    /// `[w (x^{n+1} - x^n)/tau | (x^{n+1} - x^n)/tau]`, the dissipation bound.
    pub dissipation: f64,
    pub newly_fixed: usize,
    pub newton: NewtonReport,
}

#[derive(Debug, Clone)]
pub struct Advance {
    pub state: ParticleState,
    pub field: DensityField,
    pub diagnostics: Diagnostics,
    pub record: StepRecord,
}

/// One step of size `tau`: Newton solve on the free range, fixation pass,
/// density recovery and diagnostics.
pub fn advance(
    state: &ParticleState,
    spec: &ProblemSpec,
    solver: &SolverParams,
) -> Result<Advance> {
    if state.is_fully_fixated() {
        return Err(Error::InvalidInput(
            "state is fully fixated; nothing to advance".into(),
        ));
    }
    let free = state.free;
    let ctx = ObjectiveContext::new(spec, &state.x, solver.tau, free)?;
    let energy_before = discrete_energy(&state.x, spec, free)?;
    let (x_new, newton) = solve_step(&ctx, &solver.newton)?;
    let energy_after = discrete_energy(&x_new, spec, free)?;

    let h = spec.h();
    let dissipation = h * free
        .interior()
        .map(|i| {
            let v = (x_new[i] - state.x[i]) / solver.tau;
            ctx.mobility()[i] * v * v
        })
        .sum::<f64>();

    let mut next = apply_fixation(x_new, state, solver.eps0);
    next.step_count = state.step_count + 1;
    next.t = next.step_count as f64 * solver.tau;
    let newly_fixed = free.interior_len() - next.free.interior_len();

    let field = recover_density(&next, solver.eps0);
    let diagnostics = compute_diagnostics(&field, &next, spec)?;
    Ok(Advance {
        state: next,
        field,
        diagnostics,
        record: StepRecord {
            energy_before,
            energy_after,
            dissipation,
            newly_fixed,
            newton,
        },
    })
}

/// Newton iteration counts accumulated over many steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// Steps that stopped on the round-off floor rather than a tolerance.
    pub stagnated_steps: usize,
}

impl NewtonStats {
    pub fn record(&mut self, report: &NewtonReport) {
        self.steps += 1;
        self.total_iterations += report.iterations;
        self.max_iterations = self.max_iterations.max(report.iterations);
        self.stagnated_steps += usize::from(report.stagnated);
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.steps as f64
        }
    }
}

/// Outcome of [`Simulation::step`].
#[derive(Debug, Clone)]
pub enum StepStatus {
    Advanced(Box<StepRecord>),
    /// Every particle sits on a boundary; the state no longer changes.
    Steady,
}

/// A single run: problem, solver settings and the evolving state.
#[derive(Debug, Clone)]
pub struct Simulation {
    spec: ProblemSpec,
    solver: SolverParams,
    state: ParticleState,
}

impl Simulation {
    pub fn new(spec: ProblemSpec, solver: SolverParams) -> Result<Self> {
        solver.validate()?;
        let state = init_state(&spec)?;
        Ok(Self {
            spec,
            solver,
            state,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn solver(&self) -> &SolverParams {
        &self.solver
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn field(&self) -> DensityField {
        recover_density(&self.state, self.solver.eps0)
    }

    pub fn diagnostics(&self) -> Result<Diagnostics> {
        compute_diagnostics(&self.field(), &self.state, &self.spec)
    }

    pub fn step(&mut self) -> Result<StepStatus> {
        if self.state.is_fully_fixated() {
            return Ok(StepStatus::Steady);
        }
        let adv = advance(&self.state, &self.spec, &self.solver)?;
        self.state = adv.state;
        Ok(StepStatus::Advanced(Box::new(adv.record)))
    }

    /// Number of steps needed to reach time `t` from zero.
    pub fn steps_to(&self, t: f64) -> usize {
        (t / self.solver.tau).round() as usize
    }

    /// Steps until `step_count` reaches `target` or the run becomes steady,
    /// calling `observe` after every advanced step.
    pub fn run_to_step(
        &mut self,
        target: usize,
        mut observe: impl FnMut(&ParticleState, &StepRecord),
    ) -> Result<bool> {
        while self.state.step_count < target {
            match self.step()? {
                StepStatus::Advanced(record) => observe(&self.state, &record),
                StepStatus::Steady => return Ok(true),
            }
        }
        Ok(self.state.is_fully_fixated())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{polynomial_sine, uniform};

    fn edge(v: &[f64]) -> EdgeFunction {
        EdgeFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn initial_masses() {
        let st = init_state(&ProblemSpec::pure_drift(uniform(4).unwrap()).unwrap()).unwrap();
        assert_eq!(st.m0, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
        assert_eq!(st.total_mass(), 1.0);
        assert_eq!(st.free, FreeRange::full(4));

        let twos = EdgeFunction::from_fn(10, |_| 2.0).unwrap();
        let st = init_state(&ProblemSpec::pure_drift(twos).unwrap()).unwrap();
        assert!((st.total_mass() - 2.0).abs() < 1e-14);

        let st =
            init_state(&ProblemSpec::pure_drift(polynomial_sine(1000).unwrap()).unwrap()).unwrap();
        assert!((st.total_mass() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn fixation_snaps_into_bands() {
        let spec = ProblemSpec::pure_drift(uniform(4).unwrap()).unwrap();
        let st = init_state(&spec).unwrap();
        let x = edge(&[0.0, 5e-11, 0.5, 1.0 - 1e-11, 1.0]);
        let next = apply_fixation(x, &st, 1e-10);
        assert_eq!(next.x.values(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        assert_eq!(next.free, FreeRange::new(1, 3));
        assert!(!next.is_fully_fixated());

        let untouched = edge(&[0.0, 0.3, 0.5, 0.7, 1.0]);
        let next = apply_fixation(untouched.clone(), &st, 1e-10);
        assert_eq!(next.x, untouched);
        assert_eq!(next.free, FreeRange::full(4));
    }

    #[test]
    fn fixation_of_everything_is_terminal() {
        let spec = ProblemSpec::pure_drift(uniform(3).unwrap()).unwrap();
        let st = init_state(&spec).unwrap();
        let next = apply_fixation(edge(&[0.0, 1e-12, 1.0 - 1e-12, 1.0]), &st, 1e-10);
        assert_eq!(next.free, FreeRange::new(1, 2));
        assert!(next.is_fully_fixated());
        assert!(advance(&next, &spec, &SolverParams::new(0.1)).is_err());
    }

    #[test]
    fn density_of_identity_grid() {
        let spec = ProblemSpec::pure_drift(uniform(10).unwrap()).unwrap();
        let st = init_state(&spec).unwrap();
        let field = recover_density(&st, 1e-10);
        for f in &field.density {
            assert!((f - 1.0).abs() < 1e-13);
        }
        assert!((field.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squeezed_three_particles() {
        let st = ParticleState {
            x: edge(&[0.0, 0.5, 1.0]),
            m0: vec![0.25, 0.5, 0.25],
            free: FreeRange::full(2),
            t: 0.0,
            step_count: 0,
        };
        let field = recover_density(&st, 1e-10);
        assert_eq!(field.density[1], 1.0);
        assert_eq!(field.density[0], 1.0);
    }

    #[test]
    fn boundary_spike_density_and_mass() {
        let st = ParticleState {
            x: edge(&[0.0, 0.0, 0.0, 2e-10, 0.5, 1.0]),
            m0: vec![0.1, 0.2, 0.2, 0.2, 0.2, 0.1],
            free: FreeRange::new(2, 5),
            t: 1.0,
            step_count: 10,
        };
        let field = recover_density(&st, 1e-10);
        assert_eq!(field.positions.len(), 4);
        let want_left = 2.0 / 1e-10 * 0.3 + 0.2 / 1e-10;
        assert!((field.density[0] / want_left - 1.0).abs() < 1e-14);
        assert!((field.masses[0] - 0.5).abs() < 1e-15);
        assert!((field.total_mass() - st.total_mass()).abs() < 1e-15);
        for (a, b) in field.masses_from_density().iter().zip(&field.masses) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_initial_diagnostics() {
        let spec = ProblemSpec::pure_drift(uniform(8).unwrap()).unwrap();
        let st = init_state(&spec).unwrap();
        let d = compute_diagnostics(&recover_density(&st, 1e-10), &st, &spec).unwrap();
        assert_eq!(d.total_mass, 1.0);
        assert!((d.barycenter - 0.5).abs() < 1e-15);

        let n = 200;
        let spec = ProblemSpec::pure_drift(polynomial_sine(n).unwrap()).unwrap();
        let st = init_state(&spec).unwrap();
        let d = compute_diagnostics(&recover_density(&st, 1e-10), &st, &spec).unwrap();
        assert!((d.barycenter - 0.55).abs() < 1.0 / n as f64);
    }

    #[test]
    fn two_cell_uniform_problem_never_moves() {
        let spec = ProblemSpec::pure_drift(uniform(2).unwrap()).unwrap();
        let mut sim = Simulation::new(spec, SolverParams::new(0.5)).unwrap();
        sim.run_to_step(20, |_, _| {}).unwrap();
        assert_eq!(sim.state().x.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(sim.state().step_count, 20);
        assert!((sim.state().t - 10.0).abs() < 1e-12);
    }
}
