//! Iterative linearised exponential integrator for the relaxation ODE.

mod coeff;
pub mod expo;
mod linear;
mod source;
mod stepper;

pub use coeff::{coeff_vector, indicator_change, linearise, relative_change, CoeffVector};
pub use linear::{
    affine_offset, build_linear_operator, exact_linear_solution, velocity_decay_rate, velocity_exact,
    FloatingPointFault, LinearOperator,
};
pub use source::{admissible, source_rhs, Inadmissibility};
pub(crate) use stepper::integrate_prevalidated;
pub use stepper::{
    attempt_step, attempt_step_from, integrate, integrate_fixed, integrate_with, Integration, RejectReason,
    RelaxError, SolverConfig, StepOutcome, StepStats, TrajectoryPoint,
};
