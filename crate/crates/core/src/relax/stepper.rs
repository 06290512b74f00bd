//! Iterated midpoint linearisation with adaptive step control.

use thiserror::Error;

use super::coeff::{coeff_vector, indicator_change, linearise, relative_change, CoeffVector};
use super::linear::build_linear_operator;
use super::source::{admissible, Inadmissibility};
use crate::eos::{OdeParams, PrimitiveState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Iteration convergence tolerance on the endpoint state.
    pub r_max: f64,
    pub eps_r: f64,
    /// Linearisation tolerance on the coefficient indicator.
    pub delta_max: f64,
    pub eps_delta: f64,
    /// Floor on each indicator component relative to the magnitude of the
    /// terms it is built from.
    pub eps_delta_rel: f64,
    pub k_max: usize,
    /// Safety factor on the next step size.
    pub safety: f64,
    pub eps_dt: f64,
    /// Upper bound on `dt_next / dt`.
    pub growth_cap: f64,
    /// Initial step; `None` selects `1e-3 (t_end − t0)`.
    pub dt0: Option<f64>,
    /// Smallest admissible step as a fraction of the integration span.
    pub dt_min_rel: f64,
    /// Start the iteration from a linear extrapolation of the previous step
    /// instead of `V_n`.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r_max: 1e-3,
            eps_r: 1e-30,
            delta_max: 0.5,
            eps_delta: 1e-30,
            eps_delta_rel: 1e-2,
            k_max: 8,
            safety: 0.8,
            eps_dt: 1e-14,
            growth_cap: 10.0,
            dt0: None,
            dt_min_rel: 1e-15,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn with_delta_max(mut self, delta_max: f64) -> Self {
        self.delta_max = delta_max;
        self
    }

    pub fn validate(&self) -> Result<(), RelaxError> {
        let bad = |msg: &str| Err(RelaxError::InvalidConfig(msg.to_string()));
        if !(self.r_max > 0.0) {
            return bad("r_max must be positive");
        }
        if !(self.delta_max > 0.0) {
            return bad("delta_max must be positive");
        }
        if self.k_max < 1 {
            return bad("k_max must be at least 1");
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety must lie in (0, 1)");
        }
        if !(self.growth_cap > 1.0) {
            return bad("growth_cap must exceed 1");
        }
        if !(self.eps_r >= 0.0 && self.eps_delta >= 0.0 && self.eps_delta_rel >= 0.0 && self.eps_dt >= 0.0) {
            return bad("floors must be non-negative");
        }
        if let Some(dt0) = self.dt0 {
            if !(dt0 > 0.0) {
                return bad("dt0 must be positive");
            }
        }
        if !(self.dt_min_rel > 0.0) {
            return bad("dt_min_rel must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    Inadmissible,
    FloatingPointFault,
    MaxIterations,
    DeltaExceeded,
}

impl RejectReason {
    pub const ALL: [RejectReason; 4] =
        [RejectReason::Inadmissible, RejectReason::FloatingPointFault, RejectReason::MaxIterations, RejectReason::DeltaExceeded];

    fn index(self) -> usize {
        self as usize
    }

    fn from_inadmissibility(reason: Inadmissibility) -> Self {
        match reason {
            Inadmissibility::NonFinite => RejectReason::FloatingPointFault,
            _ => RejectReason::Inadmissible,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted {
        state: PrimitiveState,
        /// Indicator vector at `state`; the reference for the next step.
        coeffs: CoeffVector,
        dt_next: f64,
        iterations: usize,
        delta: f64,
    },
    Rejected {
        dt_retry: f64,
        reason: RejectReason,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelaxError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initial state is not admissible ({0:?})")]
    InadmissibleInitialState(Inadmissibility),
    #[error("timestep underflow at t = {t:e} (dt = {dt:e}); last accepted state {state:?}")]
    StepUnderflow { t: f64, dt: f64, state: PrimitiveState },
    #[error("fixed step at t = {t:e} failed: {reason:?}")]
    FixedStepFailed { t: f64, reason: RejectReason },
}

/// One attempt to advance `v_n` by `dt`.
pub fn attempt_step(
    v_n: &PrimitiveState,
    c_n: &CoeffVector,
    dt: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
) -> StepOutcome {
    attempt_step_from(v_n, v_n, c_n, dt, params, cfg)
}

/// As [`attempt_step`], starting the iteration from `guess`.
pub fn attempt_step_from(
    v_n: &PrimitiveState,
    guess: &PrimitiveState,
    c_n: &CoeffVector,
    dt: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
) -> StepOutcome {
    let mut c = Some(*c_n);
    match attempt(v_n, guess, &mut c, dt, params, cfg, true) {
        Attempt::Accepted { state, coeffs, dt_next, iterations, delta } => StepOutcome::Accepted {
            state,
            coeffs: coeffs.expect("indicator evaluated when the next step is needed"),
            dt_next,
            iterations,
            delta: delta.expect("indicator evaluated when the next step is needed"),
        },
        Attempt::Rejected { dt_retry, reason } => StepOutcome::Rejected { dt_retry, reason },
    }
}

enum Attempt {
    Accepted {
        state: PrimitiveState,
        coeffs: Option<CoeffVector>,
        dt_next: f64,
        iterations: usize,
        delta: Option<f64>,
    },
    Rejected {
        dt_retry: f64,
        reason: RejectReason,
    },
}

/// One attempt. `c_n` is filled on first use. The indicator is at most 1, so
/// with `delta_max >= 1` it can only matter through `dt_next`; when
/// `need_next` is false it is then skipped.
fn attempt(
    v_n: &PrimitiveState,
    guess: &PrimitiveState,
    c_n: &mut Option<CoeffVector>,
    dt: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
    need_next: bool,
) -> Attempt {
    let reject = |reason| Attempt::Rejected { dt_retry: dt / 2.0, reason };
    let skip_indicator = !need_next && cfg.delta_max >= 1.0;
    let Iterate { state, c_half, iterations, converged } = match iterate(v_n, guess, dt, params, cfg, !skip_indicator) {
        Ok(it) => it,
        Err(reason) => return reject(reason),
    };
    if !converged {
        return reject(RejectReason::MaxIterations);
    }
    let Some(c_half) = c_half else {
        return Attempt::Accepted { state, coeffs: None, dt_next: dt, iterations, delta: None };
    };
    let c_ref = match c_n {
        Some(c) => *c,
        None => match coeff_vector(v_n, params) {
            Ok(c) => *c_n.insert(c),
            Err(e) => return reject(RejectReason::from_inadmissibility(e)),
        },
    };
    let c_end = match coeff_vector(&state, params) {
        Ok(c) if c.is_finite() => c,
        Ok(_) => return reject(RejectReason::FloatingPointFault),
        Err(e) => return reject(RejectReason::from_inadmissibility(e)),
    };
    let delta = indicator_change(&c_half, &c_ref, cfg.eps_delta, cfg.eps_delta_rel)
        .max(indicator_change(&c_end, &c_ref, cfg.eps_delta, cfg.eps_delta_rel));
    if delta <= cfg.delta_max {
        let grown = dt * cfg.safety * cfg.delta_max / (delta + cfg.eps_dt);
        Attempt::Accepted {
            state,
            coeffs: Some(c_end),
            dt_next: grown.min(cfg.growth_cap * dt),
            iterations,
            delta: Some(delta),
        }
    } else {
        reject(RejectReason::DeltaExceeded)
    }
}

struct Iterate {
    state: PrimitiveState,
    /// Indicator at the last midpoint, when requested.
    c_half: Option<CoeffVector>,
    iterations: usize,
    converged: bool,
}

fn iterate(
    v_n: &PrimitiveState,
    guess: &PrimitiveState,
    dt: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
    indicator: bool,
) -> Result<Iterate, RejectReason> {
    let mut previous = *guess;
    let mut last = None;
    for k in 1..=cfg.k_max {
        let mid = v_n.midpoint(&previous);
        let (op, c_half) = if indicator {
            let (op, c) = linearise(&mid, params).map_err(RejectReason::from_inadmissibility)?;
            if !c.is_finite() {
                return Err(RejectReason::FloatingPointFault);
            }
            (op, Some(c))
        } else {
            (build_linear_operator(&mid, params).map_err(RejectReason::from_inadmissibility)?, None)
        };
        let state = op.solve(v_n, dt).map_err(|_| RejectReason::FloatingPointFault)?;
        admissible(&state, params).map_err(RejectReason::from_inadmissibility)?;
        let r = relative_change(&state.to_array(), &previous.to_array(), cfg.eps_r);
        if r <= cfg.r_max {
            return Ok(Iterate { state, c_half, iterations: k, converged: true });
        }
        previous = state;
        last = Some(Iterate { state, c_half, iterations: k, converged: false });
    }
    Ok(last.expect("k_max >= 1"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: PrimitiveState,
    /// Step that produced this point (zero for the initial point).
    pub dt: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rejected_by_reason: [usize; 4],
    /// `iteration_histogram[k]` counts accepted steps that converged in `k` iterations.
    pub iteration_histogram: Vec<usize>,
    /// Fixed-step mode only: steps that hit `k_max` without converging.
    pub unconverged: usize,
}

impl StepStats {
    fn record_accept(&mut self, iterations: usize) {
        self.accepted += 1;
        if self.iteration_histogram.len() <= iterations {
            self.iteration_histogram.resize(iterations + 1, 0);
        }
        self.iteration_histogram[iterations] += 1;
    }

    fn record_reject(&mut self, reason: RejectReason) {
        self.rejected += 1;
        self.rejected_by_reason[reason.index()] += 1;
    }

    pub fn rejected_for(&self, reason: RejectReason) -> usize {
        self.rejected_by_reason[reason.index()]
    }

    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.unconverged += other.unconverged;
        for (a, b) in self.rejected_by_reason.iter_mut().zip(other.rejected_by_reason.iter()) {
            *a += b;
        }
        if self.iteration_histogram.len() < other.iteration_histogram.len() {
            self.iteration_histogram.resize(other.iteration_histogram.len(), 0);
        }
        for (a, b) in self.iteration_histogram.iter_mut().zip(other.iteration_histogram.iter()) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub trajectory: Vec<TrajectoryPoint>,
    pub stats: StepStats,
}

impl Integration {
    pub fn final_state(&self) -> PrimitiveState {
        self.trajectory.last().expect("trajectory holds the initial point").state
    }
}

fn check_inputs(v_0: &PrimitiveState, t0: f64, t_end: f64, params: &OdeParams, cfg: &SolverConfig) -> Result<(), RelaxError> {
    cfg.validate()?;
    params.validate().map_err(|e| RelaxError::InvalidParams(e.to_string()))?;
    if !(t_end > t0) {
        return Err(RelaxError::InvalidConfig(format!("t_end ({t_end:e}) must exceed t0 ({t0:e})")));
    }
    admissible(v_0, params).map_err(RelaxError::InadmissibleInitialState)
}

/// Adaptive march from `t0` to `t_end`; `observe` sees every accepted point,
/// starting with the initial one. Returns the final state.
pub fn integrate_with<F>(
    v_0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
    stats: &mut StepStats,
    observe: F,
) -> Result<PrimitiveState, RelaxError>
where
    F: FnMut(&TrajectoryPoint),
{
    check_inputs(v_0, t0, t_end, params, cfg)?;
    march(v_0, t0, t_end, params, cfg, stats, observe)
}

/// [`integrate_with`] for callers that have already validated `cfg` and
/// `params`; only the initial state is checked.
pub(crate) fn integrate_prevalidated(
    v_0: &PrimitiveState,
    t_end: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<PrimitiveState, RelaxError> {
    admissible(v_0, params).map_err(RelaxError::InadmissibleInitialState)?;
    march(v_0, 0.0, t_end, params, cfg, stats, |_| {})
}

fn march<F>(
    v_0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
    stats: &mut StepStats,
    mut observe: F,
) -> Result<PrimitiveState, RelaxError>
where
    F: FnMut(&TrajectoryPoint),
{
    let span = t_end - t0;
    let dt_min = cfg.dt_min_rel * span;
    let mut dt = cfg.dt0.unwrap_or(1e-3 * span);
    let mut t = t0;
    let mut v = *v_0;
    let mut c: Option<CoeffVector> = None;
    let mut previous: Option<(PrimitiveState, f64)> = None;
    observe(&TrajectoryPoint { t, state: v, dt: 0.0, iterations: 0 });

    while t < t_end {
        let remaining = t_end - t;
        let last_step = dt >= remaining;
        let step = if last_step { remaining } else { dt };
        if step < dt_min && !last_step {
            return Err(RelaxError::StepUnderflow { t, dt: step, state: v });
        }
        let guess = match (cfg.warm_start, previous) {
            (true, Some((prev, prev_dt))) => {
                let g = v + (v - prev) * (step / prev_dt);
                if admissible(&g, params).is_ok() {
                    g
                } else {
                    v
                }
            }
            _ => v,
        };
        match attempt(&v, &guess, &mut c, step, params, cfg, !last_step) {
            Attempt::Accepted { state, coeffs, dt_next, iterations, .. } => {
                previous = Some((v, step));
                v = state;
                c = coeffs;
                t = if last_step { t_end } else { t + step };
                stats.record_accept(iterations);
                observe(&TrajectoryPoint { t, state: v, dt: step, iterations });
                dt = dt_next;
            }
            Attempt::Rejected { dt_retry, reason } => {
                stats.record_reject(reason);
                if dt_retry < dt_min {
                    return Err(RelaxError::StepUnderflow { t, dt: dt_retry, state: v });
                }
                dt = dt_retry;
            }
        }
    }
    Ok(v)
}

/// Adaptive march from `t0` to `t_end`, recording every accepted point.
pub fn integrate(
    v_0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    params: &OdeParams,
    cfg: &SolverConfig,
) -> Result<Integration, RelaxError> {
    let mut stats = StepStats::default();
    let mut trajectory = Vec::new();
    integrate_with(v_0, t0, t_end, params, cfg, &mut stats, |p| trajectory.push(*p))?;
    Ok(Integration { trajectory, stats })
}

/// Uniform steps with the acceptance test bypassed. Each step still iterates
/// the midpoint linearisation to convergence; a step that exhausts `k_max`
/// keeps its last iterate and is counted in `stats.unconverged`.
pub fn integrate_fixed(
    v_0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    n_steps: usize,
    params: &OdeParams,
    cfg: &SolverConfig,
) -> Result<Integration, RelaxError> {
    check_inputs(v_0, t0, t_end, params, cfg)?;
    if n_steps == 0 {
        return Err(RelaxError::InvalidConfig("n_steps must be positive".into()));
    }
    let dt = (t_end - t0) / n_steps as f64;
    let mut stats = StepStats::default();
    let mut v = *v_0;
    let mut trajectory = vec![TrajectoryPoint { t: t0, state: v, dt: 0.0, iterations: 0 }];
    for n in 0..n_steps {
        let t = t0 + n as f64 * dt;
        let it = iterate(&v, &v, dt, params, cfg, false).map_err(|reason| RelaxError::FixedStepFailed { t, reason })?;
        if !it.converged {
            stats.unconverged += 1;
        }
        stats.record_accept(it.iterations);
        v = it.state;
        let t_next = if n + 1 == n_steps { t_end } else { t0 + (n + 1) as f64 * dt };
        trajectory.push(TrajectoryPoint { t: t_next, state: v, dt, iterations: it.iterations });
    }
    Ok(Integration { trajectory, stats })
}
