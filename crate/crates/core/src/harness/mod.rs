//! Presets, configuration and run drivers behind the command-line tool.

mod config;
pub mod presets;
mod runs;

use thiserror::Error;

pub use config::{
    entry, fmt_f64, key_spec, load_config_file, parse_config_text, preset_entries, resolve, ConvergenceSettings, Entry,
    KeySpec, OdeSetup, Origin, Resolved, RpSetup, Scope, SweepMode, ValueKind, KEYS,
};
pub use presets::{OdeProblem, ProblemKind};
pub use runs::{
    final_pressure_gap, relative_errors, run_convergence, run_ode, run_rp, write_resolved, ConvergenceReport, ConvergenceRow, RpReport,
    RunReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 1 for configuration problems, 2 for solver and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Solver(_) | HarnessError::Io(_) => 2,
        }
    }
}

impl From<crate::relax::RelaxError> for HarnessError {
    fn from(e: crate::relax::RelaxError) -> Self {
        HarnessError::Solver(e.to_string())
    }
}

impl From<crate::reference::RkglError> for HarnessError {
    fn from(e: crate::reference::RkglError) -> Self {
        HarnessError::Solver(format!("reference solver: {e}"))
    }
}

impl From<crate::fv::FvError> for HarnessError {
    fn from(e: crate::fv::FvError) -> Self {
        match e {
            crate::fv::FvError::InvalidConfig(msg) => HarnessError::Config(msg),
            other => HarnessError::Solver(other.to_string()),
        }
    }
}

/// Sizes the global worker pool from `BNRELAX_THREADS` when it is set.
pub fn init_thread_pool_from_env() -> Result<(), HarnessError> {
    let Ok(raw) = std::env::var("BNRELAX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| HarnessError::Config(format!("BNRELAX_THREADS must be a positive integer, got `{raw}`")))?;
    // A pool that is already running keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
