//! Three-stage Gauss–Legendre implicit Runge–Kutta integrator (order 6),
//! used as the correctness oracle for the relaxation solver.

use nalgebra::{Matrix3, SMatrix, SVector};
use thiserror::Error;

use crate::eos::{OdeParams, PrimitiveState};
use crate::relax::{admissible, source_rhs};

type Mat5 = SMatrix<f64, 5, 5>;
type Mat15 = SMatrix<f64, 15, 15>;
type Vec15 = SVector<f64, 15>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussLegendreTableau {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl GaussLegendreTableau {
    pub fn new() -> Self {
        let s = 15f64.sqrt();
        GaussLegendreTableau {
            a: [
                [5.0 / 36.0, 2.0 / 9.0 - s / 15.0, 5.0 / 36.0 - s / 30.0],
                [5.0 / 36.0 + s / 24.0, 2.0 / 9.0, 5.0 / 36.0 - s / 24.0],
                [5.0 / 36.0 + s / 30.0, 2.0 / 9.0 + s / 15.0, 5.0 / 36.0],
            ],
            b: [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
            c: [0.5 - s / 10.0, 0.5, 0.5 + s / 10.0],
        }
    }

    /// Weights `d = b A⁻¹` that recover the update from stage increments,
    /// `v_{n+1} = v_n + Σ d_j Z_j`, without evaluating the stiff source again.
    fn increment_weights(&self) -> [f64; 3] {
        let a = Matrix3::from_fn(|i, j| self.a[i][j]);
        let inv = a.try_inverse().expect("Gauss-Legendre A is nonsingular");
        let mut d = [0.0; 3];
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = (0..3).map(|i| self.b[i] * inv[(i, j)]).sum();
        }
        d
    }
}

impl Default for GaussLegendreTableau {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Central differences of the source, evaluated once per step at `v_n`.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Relative tolerance on the Newton increment of the stage unknowns.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianMode,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tolerance: 1e-13, max_iterations: 40, jacobian: JacobianMode::FiniteDifference }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkglSettings {
    pub newton: NewtonSettings,
    /// Step-doubling tolerance on the componentwise relative difference.
    pub tol: f64,
    /// Initial step; `None` selects `1e-6 (t_end − t0)`.
    pub dt0: Option<f64>,
    pub dt_min_rel: f64,
}

impl Default for RkglSettings {
    fn default() -> Self {
        Self { newton: NewtonSettings::default(), tol: 1e-10, dt0: None, dt_min_rel: 1e-18 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RkglError {
    #[error("Newton iteration did not converge in {iterations} iterations (last increment {increment:e})")]
    NewtonFailed { iterations: usize, increment: f64 },
    #[error("step produced an inadmissible state")]
    Inadmissible,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("timestep underflow at t = {t:e} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },
}

/// Per-component scale used for relative tests: velocities and pressures are
/// measured against the largest member of their pair, the volume fraction
/// against itself.
fn component_scales(v: &PrimitiveState) -> [f64; 5] {
    let u = v.u1.abs().max(v.u2.abs());
    let p = v.p1.abs().max(v.p2.abs());
    [u, u, p, p, v.alpha1.abs()]
}

fn fd_jacobian(v: &PrimitiveState, params: &OdeParams) -> Mat5 {
    let x = v.to_array();
    let scale = component_scales(v);
    let mut jac = Mat5::zeros();
    for j in 0..5 {
        let h = if j == 4 {
            6e-6 * v.alpha1.min(1.0 - v.alpha1)
        } else {
            6e-6 * scale[j].max(1e-300)
        };
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let fp = source_rhs(&PrimitiveState::from_array(xp), params).to_array();
        let fm = source_rhs(&PrimitiveState::from_array(xm), params).to_array();
        for i in 0..5 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// One Gauss–Legendre step of size `dt` from `v_n`.
pub fn rkgl3_step(
    v_n: &PrimitiveState,
    dt: f64,
    params: &OdeParams,
    settings: &NewtonSettings,
) -> Result<PrimitiveState, RkglError> {
    let tab = GaussLegendreTableau::new();
    let x0 = v_n.to_array();
    let jac = match settings.jacobian {
        JacobianMode::FiniteDifference => fd_jacobian(v_n, params),
    };
    let mut m = Mat15::identity();
    for i in 0..3 {
        for j in 0..3 {
            for r in 0..5 {
                for c in 0..5 {
                    m[(5 * i + r, 5 * j + c)] -= dt * tab.a[i][j] * jac[(r, c)];
                }
            }
        }
    }
    let lu = m.lu();

    let scale = component_scales(v_n);
    let mut z = Vec15::zeros();
    let mut prev_inc = f64::INFINITY;
    for it in 1..=settings.max_iterations {
        let mut f = [[0.0; 5]; 3];
        for (j, fj) in f.iter_mut().enumerate() {
            let stage = PrimitiveState::from_array(std::array::from_fn(|r| x0[r] + z[5 * j + r]));
            *fj = source_rhs(&stage, params).to_array();
        }
        let mut g = Vec15::zeros();
        for i in 0..3 {
            for r in 0..5 {
                let sum: f64 = (0..3).map(|j| tab.a[i][j] * f[j][r]).sum();
                g[5 * i + r] = -(z[5 * i + r] - dt * sum);
            }
        }
        if !g.iter().all(|x| x.is_finite()) {
            return Err(RkglError::NewtonFailed { iterations: it, increment: f64::NAN });
        }
        let dz = lu.solve(&g).ok_or(RkglError::NewtonFailed { iterations: it, increment: f64::NAN })?;
        z += dz;
        let inc = (0..15)
            .map(|k| {
                let r = k % 5;
                let den = scale[r] + z[k].abs();
                if den > 0.0 {
                    dz[k].abs() / den
                } else {
                    dz[k].abs()
                }
            })
            .fold(0.0, f64::max);
        if !inc.is_finite() {
            return Err(RkglError::NewtonFailed { iterations: it, increment: inc });
        }
        // stagnation at rounding level counts as converged
        if inc <= settings.tolerance || (inc <= 1e3 * settings.tolerance && inc >= 0.5 * prev_inc) {
            let d = tab.increment_weights();
            let out = PrimitiveState::from_array(std::array::from_fn(|r| {
                x0[r] + (0..3).map(|j| d[j] * z[5 * j + r]).sum::<f64>()
            }));
            admissible(&out, params).map_err(|_| RkglError::Inadmissible)?;
            return Ok(out);
        }
        prev_inc = inc;
    }
    Err(RkglError::NewtonFailed { iterations: settings.max_iterations, increment: prev_inc })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkglPoint {
    pub t: f64,
    pub state: PrimitiveState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkglTrajectory {
    pub points: Vec<RkglPoint>,
    pub accepted: usize,
    pub rejected: usize,
}

impl RkglTrajectory {
    pub fn final_state(&self) -> PrimitiveState {
        self.points.last().expect("trajectory holds the initial point").state
    }
}

/// Componentwise relative difference with per-pair scales.
fn doubling_error(full: &PrimitiveState, half: &PrimitiveState) -> f64 {
    let (a, b) = (full.to_array(), half.to_array());
    let sa = component_scales(full);
    let sb = component_scales(half);
    (0..5)
        .map(|i| {
            let den = sa[i] + sb[i];
            if den > 0.0 {
                (a[i] - b[i]).abs() / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Adaptive integration with step-doubling error control.
pub fn rkgl3_integrate(
    v0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    params: &OdeParams,
    settings: &RkglSettings,
) -> Result<RkglTrajectory, RkglError> {
    if !(t_end > t0) {
        return Err(RkglError::InvalidSettings("t_end must exceed t0".into()));
    }
    if !(settings.tol > 0.0 && settings.newton.tolerance > 0.0) {
        return Err(RkglError::InvalidSettings("tolerances must be positive".into()));
    }
    admissible(v0, params).map_err(|_| RkglError::Inadmissible)?;
    let span = t_end - t0;
    let dt_min = settings.dt_min_rel * span;
    let mut dt = settings.dt0.unwrap_or(1e-6 * span);
    let mut t = t0;
    let mut v = *v0;
    let mut out = RkglTrajectory { points: vec![RkglPoint { t, state: v }], accepted: 0, rejected: 0 };

    while t < t_end {
        let last = t + dt >= t_end;
        let h = if last { t_end - t } else { dt };
        let attempt = rkgl3_step(&v, h, params, &settings.newton).and_then(|full| {
            let mid = rkgl3_step(&v, 0.5 * h, params, &settings.newton)?;
            let half = rkgl3_step(&mid, 0.5 * h, params, &settings.newton)?;
            Ok((full, half))
        });
        match attempt {
            Ok((full, half)) => {
                let err = doubling_error(&full, &half);
                if err <= settings.tol {
                    t = if last { t_end } else { t + h };
                    v = half;
                    out.points.push(RkglPoint { t, state: v });
                    out.accepted += 1;
                    let grow = if err > 0.0 { (0.9 * (settings.tol / err).powf(1.0 / 7.0)).min(2.0) } else { 2.0 };
                    dt = h * grow.max(1.0);
                    continue;
                }
                out.rejected += 1;
                dt = 0.5 * h;
            }
            Err(_) => {
                out.rejected += 1;
                dt = 0.5 * h;
            }
        }
        if dt < dt_min {
            return Err(RkglError::StepUnderflow { t, dt });
        }
    }
    Ok(out)
}

/// `n_steps` uniform steps, no error control.
pub fn rkgl3_fixed(
    v0: &PrimitiveState,
    t0: f64,
    t_end: f64,
    n_steps: usize,
    params: &OdeParams,
    settings: &NewtonSettings,
) -> Result<PrimitiveState, RkglError> {
    let dt = (t_end - t0) / n_steps as f64;
    let mut v = *v0;
    for _ in 0..n_steps {
        v = rkgl3_step(&v, dt, params, settings)?;
    }
    Ok(v)
}

/// Least-squares fit of `log(error)` against `log(dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Set when the errors are at rounding level or not positive, so the
    /// slope carries no information.
    pub degenerate: bool,
}

/// Slope of the error against step size on a log-log plane. `noise` is the
/// error level below which a point is treated as rounding.
pub fn observed_order(step_sizes: &[f64], errors: &[f64], noise: f64) -> OrderFit {
    assert_eq!(step_sizes.len(), errors.len());
    let pts: Vec<(f64, f64)> = step_sizes
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && e.is_finite() && **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let usable = errors.iter().filter(|e| e.is_finite() && **e > noise).count();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return OrderFit { slope: f64::NAN, intercept: f64::NAN, degenerate: true };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    OrderFit { slope, intercept: my - slope * mx, degenerate: usable < 2 || !slope.is_finite() }
}

/// Classical fourth-order explicit Runge–Kutta step, for cross-checks at
/// non-stiff step sizes.
pub fn rk4_step(v: &PrimitiveState, dt: f64, params: &OdeParams) -> PrimitiveState {
    let k1 = source_rhs(v, params);
    let k2 = source_rhs(&(*v + k1 * (0.5 * dt)), params);
    let k3 = source_rhs(&(*v + k2 * (0.5 * dt)), params);
    let k4 = source_rhs(&(*v + k3 * dt), params);
    *v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{EosPhase, InterfaceClosure};
    use crate::relax::velocity_exact;

    /// Rooted trees up to a given order, stored as sorted child lists.
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    struct Tree(Vec<Tree>);

    impl Tree {
        fn order(&self) -> usize {
            1 + self.0.iter().map(Tree::order).sum::<usize>()
        }
        fn gamma(&self) -> f64 {
            self.order() as f64 * self.0.iter().map(Tree::gamma).product::<f64>()
        }
        /// Stage vector of the elementary weight.
        fn stage(&self, a: &[[f64; 3]; 3]) -> [f64; 3] {
            let mut g = [1.0; 3];
            for child in &self.0 {
                let gc = child.stage(a);
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi *= (0..3).map(|j| a[i][j] * gc[j]).sum::<f64>();
                }
            }
            g
        }
    }

    fn trees_up_to(max: usize) -> Vec<Tree> {
        // multisets of existing trees with total order n-1, built in
        // non-increasing index order to avoid duplicates
        fn extend(all: &[Tree], remaining: usize, start: usize, current: &mut Vec<Tree>, out: &mut Vec<Tree>) {
            if remaining == 0 {
                let mut children = current.clone();
                children.sort();
                out.push(Tree(children));
                return;
            }
            for idx in start..all.len() {
                let o = all[idx].order();
                if o <= remaining {
                    current.push(all[idx].clone());
                    extend(all, remaining - o, idx, current, out);
                    current.pop();
                }
            }
        }
        let mut all = vec![Tree(vec![])];
        for n in 2..=max {
            let mut new = Vec::new();
            let snapshot: Vec<Tree> = all.iter().filter(|t| t.order() < n).cloned().collect();
            extend(&snapshot, n - 1, 0, &mut Vec::new(), &mut new);
            all.extend(new);
        }
        all
    }

    #[test]
    fn order_conditions_through_six() {
        let tab = GaussLegendreTableau::new();
        let trees = trees_up_to(6);
        let counts: Vec<usize> = (1..=6).map(|n| trees.iter().filter(|t| t.order() == n).count()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20]);
        for t in &trees {
            let g = t.stage(&tab.a);
            let phi: f64 = (0..3).map(|i| tab.b[i] * g[i]).sum();
            assert!((phi - 1.0 / t.gamma()).abs() < 1e-14, "order {}: {phi} vs {}", t.order(), 1.0 / t.gamma());
        }
        for i in 0..3 {
            let row: f64 = tab.a[i].iter().sum();
            assert!((row - tab.c[i]).abs() < 1e-15);
        }
        // order 7 must fail for a 3-stage method: Σ b c^6 ≠ 1/7
        let bushy: f64 = (0..3).map(|i| tab.b[i] * tab.c[i].powi(6)).sum();
        assert!((bushy - 1.0 / 7.0).abs() > 1e-6);
    }

    fn a1() -> (PrimitiveState, OdeParams) {
        (
            PrimitiveState::new(-5.0, 5.0, 0.1, 20.0, 0.9),
            OdeParams {
                m1: 1.0,
                m2: 4.0,
                eos1: EosPhase::new(6.0, 0.0).unwrap(),
                eos2: EosPhase::new(1.4, 0.0).unwrap(),
                lambda: 1e9,
                nu: 10.0,
                closure: InterfaceClosure::Simple,
            },
        )
    }

    #[test]
    fn zero_source_leaves_state() {
        let (v, mut params) = a1();
        params.lambda = 0.0;
        params.nu = 0.0;
        let out = rkgl3_step(&v, 1e-3, &params, &NewtonSettings::default()).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn velocity_step_matches_closed_form() {
        let (v, mut params) = a1();
        params.nu = 0.0;
        let v = PrimitiveState { p1: 20.0, ..v };
        let k = params.lambda * (1.0 / params.m1 + 1.0 / params.m2);
        for kdt in [1e-3, 1e-2, 0.05] {
            let dt = kdt / k;
            let out = rkgl3_step(&v, dt, &params, &NewtonSettings::default()).unwrap();
            let (u1, u2) = velocity_exact(&v, &params, dt);
            assert!((out.u1 - u1).abs() <= 1e-12 * u1.abs(), "kdt={kdt}: {} vs {u1}", out.u1);
            assert!((out.u2 - u2).abs() <= 1e-12 * u2.abs());
        }
        // at k dt = 1 the gap follows the (3,3) Padé approximant of e^{-z}
        // exactly, which is ~4e-6 away from e^{-1}
        let dt = 1.0 / k;
        let out = rkgl3_step(&v, dt, &params, &NewtonSettings::default()).unwrap();
        let pade = (1.0 - 0.5 + 0.1 - 1.0 / 120.0) / (1.0 + 0.5 + 0.1 + 1.0 / 120.0);
        let gap = (out.u1 - out.u2) / (v.u1 - v.u2);
        assert!((gap - pade).abs() < 1e-13);
        assert!((pade - (-1f64).exp()).abs() > 1e-6);
    }

    #[test]
    fn matches_rk4_at_small_step() {
        let (v, params) = a1();
        let dt = 1e-12;
        let gl = rkgl3_step(&v, dt, &params, &NewtonSettings::default()).unwrap();
        let rk = rk4_step(&v, dt, &params);
        for (a, b) in gl.to_array().iter().zip(rk.to_array().iter()) {
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn a_stable_on_stiff_decay() {
        // velocity gap decays with k_vel; one step at k dt = 1e6
        let (v, mut params) = a1();
        params.nu = 0.0;
        let k = params.lambda * (1.0 / params.m1 + 1.0 / params.m2);
        let out = rkgl3_step(&v, 1e6 / k, &params, &NewtonSettings::default()).unwrap();
        assert!((out.u1 - out.u2).abs() < (v.u1 - v.u2).abs());
    }

    #[test]
    fn equilibrium_trajectory_is_constant() {
        let (_, params) = a1();
        let v = PrimitiveState::new(3.0, 3.0, 50.0, 50.0, 0.7);
        let tr = rkgl3_integrate(&v, 0.0, 1e-3, &params, &RkglSettings::default()).unwrap();
        for p in &tr.points {
            assert_eq!(p.state, v);
        }
    }

    #[test]
    fn observed_order_flags_rounding() {
        let fit = observed_order(&[1.0, 0.5, 0.25, 0.125], &[1e-17, 2e-17, 0.0, 1e-17], 1e-14);
        assert!(fit.degenerate);
        let fit = observed_order(&[1.0, 0.5, 0.25, 0.125], &[1.0, 0.25, 0.0625, 0.015625], 1e-14);
        assert!(!fit.degenerate);
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }
}
