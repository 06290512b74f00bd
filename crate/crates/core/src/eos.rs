//! Stiffened-gas thermodynamics and the state types shared by the ODE and PDE layers.
//!
//! Each phase obeys `p = (γ − 1) ρe − γΠ`, so the volumetric internal energy is
//! affine in pressure: `ρe = k_a p + k_b` with `k_a = 1/(γ − 1)` and
//! `k_b = γΠ/(γ − 1)`. Both coefficients are stored on [`EosPhase`].

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EosError {
    #[error("invalid equation of state: {0}")]
    InvalidParameters(String),
    #[error("inadmissible state: {component} = {value:e}")]
    Inadmissible { component: &'static str, value: f64 },
}

/// Stiffened-gas constants for one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosPhase {
    gamma: f64,
    pi_inf: f64,
    ka: f64,
    kb: f64,
}

impl EosPhase {
    pub fn new(gamma: f64, pi_inf: f64) -> Result<Self, EosError> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(EosError::InvalidParameters(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(pi_inf.is_finite() && pi_inf >= 0.0) {
            return Err(EosError::InvalidParameters(format!(
                "pi_inf must be non-negative, got {pi_inf}"
            )));
        }
        Ok(Self { gamma, pi_inf, ka: 1.0 / (gamma - 1.0), kb: gamma * pi_inf / (gamma - 1.0) })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pi_inf(&self) -> f64 {
        self.pi_inf
    }

    /// Slope of `ρe` with respect to pressure.
    pub fn ka(&self) -> f64 {
        self.ka
    }

    /// Intercept of `ρe` at zero pressure.
    pub fn kb(&self) -> f64 {
        self.kb
    }

    pub fn internal_energy(&self, p: f64) -> f64 {
        self.ka * p + self.kb
    }

    /// Inverse of [`EosPhase::internal_energy`].
    pub fn pressure(&self, rho_e: f64) -> f64 {
        (self.gamma - 1.0) * rho_e - self.gamma * self.pi_inf
    }

    /// `p + γΠ`, positive exactly when the internal energy is.
    pub fn energy_margin(&self, p: f64) -> f64 {
        p + self.gamma * self.pi_inf
    }
}

/// Volumetric internal energy `ρe` for pressure `p`. Non-positive results mark
/// an inadmissible pressure; the caller decides what to do with them.
pub fn phase_internal_energy(p: f64, eos: &EosPhase) -> f64 {
    eos.internal_energy(p)
}

/// Stiffened-gas sound speed `sqrt(γ(p + Π)/ρ)`.
pub fn sound_speed(rho: f64, p: f64, eos: &EosPhase) -> Result<f64, EosError> {
    if !(rho > 0.0) {
        return Err(EosError::Inadmissible { component: "rho", value: rho });
    }
    let radicand = eos.gamma * (p + eos.pi_inf) / rho;
    if !(radicand > 0.0) || !radicand.is_finite() {
        return Err(EosError::Inadmissible { component: "p + pi_inf", value: p + eos.pi_inf });
    }
    Ok(radicand.sqrt())
}

/// Sound speed with the radicand floored at zero, for closures that only need
/// an impedance weight and must not fail on marginal states.
pub(crate) fn sound_speed_floored(rho: f64, p: f64, eos: &EosPhase) -> f64 {
    (eos.gamma * (p + eos.pi_inf) / rho).max(0.0).sqrt()
}

/// The two phase equations of state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosPair {
    pub phase1: EosPhase,
    pub phase2: EosPhase,
}

impl EosPair {
    pub fn new(phase1: EosPhase, phase2: EosPhase) -> Self {
        Self { phase1, phase2 }
    }
}

/// Interface velocity paired with the impedance-weighted interface pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceVelocity {
    /// `u_I = u_1`.
    #[default]
    Phase1,
    /// `u_I = (Z_1 u_1 + Z_2 u_2)/(Z_1 + Z_2)`.
    ImpedanceWeighted,
}

/// Interface pressure/velocity closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceClosure {
    /// `p_I = p_2`, `u_I = u_1`.
    #[default]
    Simple,
    /// `p_I = (Z_2 p_1 + Z_1 p_2)/(Z_1 + Z_2)` with `Z_k = ρ_k a_k`.
    Impedance(InterfaceVelocity),
}

/// Interface values expressed as a pressure and the velocity weight
/// `u_I = w1 u_1 + (1 − w1) u_2`. Freezing `w1` keeps `u_I − u_k` proportional
/// to `u_2 − u_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceWeights {
    pub p_i: f64,
    pub w1: f64,
}

impl InterfaceWeights {
    pub fn u_i(&self, u1: f64, u2: f64) -> f64 {
        self.w1 * u1 + (1.0 - self.w1) * u2
    }
}

/// Computes the closure weights from phase densities, velocities and pressures.
#[allow(clippy::too_many_arguments)]
pub fn interface_weights(
    closure: InterfaceClosure,
    eos: &EosPair,
    rho1: f64,
    rho2: f64,
    p1: f64,
    p2: f64,
) -> InterfaceWeights {
    match closure {
        InterfaceClosure::Simple => InterfaceWeights { p_i: p2, w1: 1.0 },
        InterfaceClosure::Impedance(velocity) => {
            let z1 = rho1 * sound_speed_floored(rho1, p1, &eos.phase1);
            let z2 = rho2 * sound_speed_floored(rho2, p2, &eos.phase2);
            let zsum = z1 + z2;
            let (p_i, w_imp) = if zsum > 0.0 && zsum.is_finite() {
                ((z2 * p1 + z1 * p2) / zsum, z1 / zsum)
            } else {
                (0.5 * (p1 + p2), 0.5)
            };
            let w1 = match velocity {
                InterfaceVelocity::Phase1 => 1.0,
                InterfaceVelocity::ImpedanceWeighted => w_imp,
            };
            InterfaceWeights { p_i, w1 }
        }
    }
}

/// Relaxation-ODE unknowns `(u1, u2, p1, p2, α1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitiveState {
    pub u1: f64,
    pub u2: f64,
    pub p1: f64,
    pub p2: f64,
    pub alpha1: f64,
}

impl PrimitiveState {
    pub fn new(u1: f64, u2: f64, p1: f64, p2: f64, alpha1: f64) -> Self {
        Self { u1, u2, p1, p2, alpha1 }
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self { u1: v[0], u2: v[1], p1: v[2], p2: v[3], alpha1: v[4] }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.u1, self.u2, self.p1, self.p2, self.alpha1]
    }

    pub fn alpha2(&self) -> f64 {
        1.0 - self.alpha1
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        (*self + *other) * 0.5
    }
}

impl Add for PrimitiveState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.u1 + o.u1, self.u2 + o.u2, self.p1 + o.p1, self.p2 + o.p2, self.alpha1 + o.alpha1)
    }
}

impl Sub for PrimitiveState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.u1 - o.u1, self.u2 - o.u2, self.p1 - o.p1, self.p2 - o.p2, self.alpha1 - o.alpha1)
    }
}

impl Mul<f64> for PrimitiveState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.u1 * s, self.u2 * s, self.p1 * s, self.p2 * s, self.alpha1 * s)
    }
}

/// Parameters held fixed during a relaxation solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeParams {
    /// Partial density `α1ρ1`.
    pub m1: f64,
    /// Partial density `α2ρ2`.
    pub m2: f64,
    pub eos1: EosPhase,
    pub eos2: EosPhase,
    /// Velocity relaxation rate λ.
    pub lambda: f64,
    /// Pressure relaxation rate ν.
    pub nu: f64,
    pub closure: InterfaceClosure,
}

impl OdeParams {
    pub fn validate(&self) -> Result<(), EosError> {
        let checks: [(&'static str, f64, bool); 4] = [
            ("m1", self.m1, self.m1 > 0.0),
            ("m2", self.m2, self.m2 > 0.0),
            ("lambda", self.lambda, self.lambda >= 0.0),
            ("nu", self.nu, self.nu >= 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(EosError::InvalidParameters(format!("{name} = {value:e}")));
            }
        }
        Ok(())
    }

    pub fn eos_pair(&self) -> EosPair {
        EosPair::new(self.eos1, self.eos2)
    }

    /// Phase densities implied by the partial densities and `v.alpha1`.
    pub fn densities(&self, v: &PrimitiveState) -> (f64, f64) {
        (self.m1 / v.alpha1, self.m2 / v.alpha2())
    }

    pub fn interface_weights(&self, v: &PrimitiveState) -> InterfaceWeights {
        let (rho1, rho2) = self.densities(v);
        interface_weights(self.closure, &self.eos_pair(), rho1, rho2, v.p1, v.p2)
    }

    /// Mixture momentum `m1 u1 + m2 u2`.
    pub fn momentum(&self, v: &PrimitiveState) -> f64 {
        self.m1 * v.u1 + self.m2 * v.u2
    }

    /// Mixture total energy `Σ α_k ρ_k e_k + ½ m_k u_k²`.
    pub fn total_energy(&self, v: &PrimitiveState) -> f64 {
        v.alpha1 * self.eos1.internal_energy(v.p1)
            + v.alpha2() * self.eos2.internal_energy(v.p2)
            + 0.5 * (self.m1 * v.u1 * v.u1 + self.m2 * v.u2 * v.u2)
    }
}

/// Interface pressure and velocity for the ODE state `v` given phase densities.
pub fn interface_state(v: &PrimitiveState, params: &OdeParams, rho1: f64, rho2: f64) -> (f64, f64) {
    let w = interface_weights(params.closure, &params.eos_pair(), rho1, rho2, v.p1, v.p2);
    (w.p_i, w.u_i(v.u1, v.u2))
}

/// Full primitive description of a finite-volume cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellPrimitive {
    pub alpha1: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub u1: f64,
    pub u2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CellPrimitive {
    pub const LEN: usize = 7;

    pub fn from_array(w: [f64; 7]) -> Self {
        Self { alpha1: w[0], rho1: w[1], rho2: w[2], u1: w[3], u2: w[4], p1: w[5], p2: w[6] }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.alpha1, self.rho1, self.rho2, self.u1, self.u2, self.p1, self.p2]
    }

    pub fn alpha2(&self) -> f64 {
        1.0 - self.alpha1
    }

    /// Mixture pressure `α1 p1 + α2 p2`.
    pub fn p_mix(&self) -> f64 {
        self.alpha1 * self.p1 + self.alpha2() * self.p2
    }

    pub fn ode_state(&self) -> PrimitiveState {
        PrimitiveState::new(self.u1, self.u2, self.p1, self.p2, self.alpha1)
    }

    /// Partial densities `(α1ρ1, α2ρ2)`.
    pub fn partial_densities(&self) -> (f64, f64) {
        (self.alpha1 * self.rho1, self.alpha2() * self.rho2)
    }

    /// Rebuilds a cell from relaxed ODE unknowns at fixed partial densities.
    pub fn from_ode_state(v: &PrimitiveState, m1: f64, m2: f64) -> Self {
        Self {
            alpha1: v.alpha1,
            rho1: m1 / v.alpha1,
            rho2: m2 / v.alpha2(),
            u1: v.u1,
            u2: v.u2,
            p1: v.p1,
            p2: v.p2,
        }
    }
}

/// Conserved vector `(α1ρ1, α2ρ2, α1ρ1u1, α2ρ2u2, α1ρ1E1, α2ρ2E2, α1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Conserved(pub [f64; 7]);

impl Conserved {
    pub const LEN: usize = 7;

    pub fn zero() -> Self {
        Self([0.0; 7])
    }

    pub fn alpha1(&self) -> f64 {
        self.0[6]
    }

    pub fn axpy(&self, a: f64, x: &Conserved) -> Conserved {
        let mut out = self.0;
        for (o, xi) in out.iter_mut().zip(x.0.iter()) {
            *o += a * xi;
        }
        Conserved(out)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for Conserved {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.axpy(1.0, &o)
    }
}

impl Sub for Conserved {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.axpy(-1.0, &o)
    }
}

impl Mul<f64> for Conserved {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Conserved(self.0.map(|x| x * s))
    }
}

pub fn prim_to_cons(w: &CellPrimitive, eos: &EosPair) -> Conserved {
    let a1 = w.alpha1;
    let a2 = w.alpha2();
    let m1 = a1 * w.rho1;
    let m2 = a2 * w.rho2;
    let e1 = a1 * eos.phase1.internal_energy(w.p1) + 0.5 * m1 * w.u1 * w.u1;
    let e2 = a2 * eos.phase2.internal_energy(w.p2) + 0.5 * m2 * w.u2 * w.u2;
    Conserved([m1, m2, m1 * w.u1, m2 * w.u2, e1, e2, a1])
}

pub fn cons_to_prim(q: &Conserved, eos: &EosPair) -> Result<CellPrimitive, EosError> {
    let [m1, m2, mom1, mom2, en1, en2, a1] = q.0;
    if !q.is_finite() {
        let (component, value) = CONSERVED_NAMES
            .iter()
            .zip(q.0.iter())
            .find(|(_, v)| !v.is_finite())
            .map(|(n, v)| (*n, *v))
            .unwrap_or(("q", f64::NAN));
        return Err(EosError::Inadmissible { component, value });
    }
    if !(a1 > 0.0 && a1 < 1.0) {
        return Err(EosError::Inadmissible { component: "alpha1", value: a1 });
    }
    if !(m1 > 0.0) {
        return Err(EosError::Inadmissible { component: "alpha1*rho1", value: m1 });
    }
    if !(m2 > 0.0) {
        return Err(EosError::Inadmissible { component: "alpha2*rho2", value: m2 });
    }
    let a2 = 1.0 - a1;
    let u1 = mom1 / m1;
    let u2 = mom2 / m2;
    let rho_e1 = (en1 - 0.5 * mom1 * u1) / a1;
    let rho_e2 = (en2 - 0.5 * mom2 * u2) / a2;
    if !(rho_e1 > 0.0) {
        return Err(EosError::Inadmissible { component: "rho1*e1", value: rho_e1 });
    }
    if !(rho_e2 > 0.0) {
        return Err(EosError::Inadmissible { component: "rho2*e2", value: rho_e2 });
    }
    Ok(CellPrimitive {
        alpha1: a1,
        rho1: m1 / a1,
        rho2: m2 / a2,
        u1,
        u2,
        p1: eos.phase1.pressure(rho_e1),
        p2: eos.phase2.pressure(rho_e2),
    })
}

pub(crate) const CONSERVED_NAMES: [&str; 7] =
    ["alpha1*rho1", "alpha2*rho2", "alpha1*rho1*u1", "alpha2*rho2*u2", "alpha1*rho1*E1", "alpha2*rho2*E2", "alpha1"];
