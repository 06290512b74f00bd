//! Solvers for stiff mechanical relaxation in Baer–Nunziato two-phase flow.
//!
//! - [`eos`]: stiffened-gas thermodynamics and state conversions.
//! - [`relax`]: the linearised exponential integrator with adaptive steps.
//! - [`reference`]: three-stage Gauss–Legendre implicit Runge–Kutta oracle.
//! - [`fv`]: 1D path-conservative MUSCL–Hancock solver with source splitting.
//! - [`harness`]: presets, configuration, and the runs behind the CLI.

pub mod eos;
pub mod fv;
pub mod harness;
pub mod reference;
pub mod relax;
