//! One-dimensional path-conservative MUSCL–Hancock solver for the
//! seven-equation model, with the mechanical relaxation sources applied per
//! cell by operator splitting.

mod flux;
mod grid;
mod problem;
mod scheme;
mod split;

use thiserror::Error;

use crate::eos::{EosError, EosPair, InterfaceClosure};
use crate::relax::RelaxError;

pub use flux::{
    max_wavespeed, noncons_product, physical_flux, riemann_flux, wavespeed_bounds, Fluctuations, RiemannSolver,
};
pub use grid::{Boundary, CellField, Grid1D, GHOSTS};
pub use problem::{run_riemann_problem, write_snapshot_csv, RiemannProblem, RiemannRun, RunOptions, Snapshot};
pub use scheme::{muscl_hancock_step, stable_dt, HyperbolicConfig, Limiter};
pub use split::{relax_cells, split_advance, SplitDiagnostics, Splitting};

/// Physical parameters of a PDE run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdePhysics {
    pub eos: EosPair,
    pub closure: InterfaceClosure,
    /// Velocity relaxation rate.
    pub lambda: f64,
    /// Pressure relaxation rate.
    pub nu: f64,
}

#[derive(Debug, Error)]
pub enum FvError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inadmissible state{}: {component} = {value:e}", cell_label(.cell))]
    Inadmissible { cell: Option<usize>, component: &'static str, value: f64 },
    #[error("relaxation failed in cell {cell}: {source}")]
    Relax {
        cell: usize,
        #[source]
        source: RelaxError,
    },
    #[error("time step {0:e} is not positive and finite")]
    BadTimeStep(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn cell_label(cell: &Option<usize>) -> String {
    match cell {
        Some(i) => format!(" in cell {i}"),
        None => String::new(),
    }
}

impl FvError {
    pub(crate) fn from_eos(cell: Option<usize>, e: EosError) -> Self {
        match e {
            EosError::Inadmissible { component, value } => FvError::Inadmissible { cell, component, value },
            EosError::InvalidParameters(msg) => FvError::InvalidConfig(msg),
        }
    }

    pub(crate) fn at_cell(self, i: usize) -> Self {
        match self {
            FvError::Inadmissible { component, value, .. } => FvError::Inadmissible { cell: Some(i), component, value },
            other => other,
        }
    }
}
