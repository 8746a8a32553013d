//! Lagrangian particle solver for the Wright-Fisher genetic drift equation
//! on `[0, 1]`, with optional semi-dominant selection.
//!
//! Each time step minimises a convex functional over strictly increasing
//! particle positions by a damped Newton iteration. Particles reaching the
//! boundaries are fixed and their mass is bundled into boundary
//! super-particles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delta;
pub mod energy;
pub mod error;
pub mod grid;
pub mod newton;
pub mod problem;
pub mod stepper;
pub mod tridiag;

pub use delta::{
    mass_interpolate, p_fix, solve_delta, solve_selection, DeltaSnapshot, DeltaSpec,
    InterpolationResult, SplitRun,
};
pub use energy::{discrete_energy, FreeRange, Objective, ObjectiveContext};
pub use error::{Error, Result};
pub use grid::{CellFunction, EdgeFunction};
pub use newton::{
    damping_factor, newton_decrement, solve_step, NewtonParams, NewtonReport, LAMBDA_STAR,
};
pub use problem::ProblemSpec;
pub use stepper::{
    advance, apply_fixation, init_state, recover_density, DensityField, Diagnostics, NewtonStats,
    ParticleState, Simulation, SolverParams, StepRecord, StepStatus, DEFAULT_EPS0,
};
pub use tridiag::TridiagonalMatrix;
