use crate::eos::{OdeParams, PrimitiveState};

/// Why a state failed the admissibility test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inadmissibility {
    NonFinite,
    VolumeFraction,
    InternalEnergy1,
    InternalEnergy2,
}

/// Right-hand side of the relaxation ODE in `(u1, u2, p1, p2, α1)`.
pub fn source_rhs(v: &PrimitiveState, params: &OdeParams) -> PrimitiveState {
    let iw = params.interface_weights(v);
    let u_i = iw.u_i(v.u1, v.u2);
    let a1 = v.alpha1;
    let a2 = v.alpha2();
    let (ka1, kb1) = (params.eos1.ka(), params.eos1.kb());
    let (ka2, kb2) = (params.eos2.ka(), params.eos2.kb());
    let du = v.u2 - v.u1;
    let dp = v.p2 - v.p1;
    let lam = params.lambda;
    let nu = params.nu;

    PrimitiveState {
        u1: lam / params.m1 * du,
        u2: -lam / params.m2 * du,
        p1: nu * (iw.p_i + ka1 * v.p1 + kb1) / (a1 * ka1) * dp + lam * (u_i - v.u1) / (a1 * ka1) * du,
        p2: -nu * (iw.p_i + ka2 * v.p2 + kb2) / (a2 * ka2) * dp - lam * (u_i - v.u2) / (a2 * ka2) * du,
        alpha1: -nu * dp,
    }
}

/// Positive phase internal energies, `0 < α1 < 1`, and finite components.
pub fn admissible(v: &PrimitiveState, params: &OdeParams) -> Result<(), Inadmissibility> {
    if !v.is_finite() {
        return Err(Inadmissibility::NonFinite);
    }
    if !(v.alpha1 > 0.0 && v.alpha1 < 1.0) {
        return Err(Inadmissibility::VolumeFraction);
    }
    if !(params.eos1.energy_margin(v.p1) > 0.0) {
        return Err(Inadmissibility::InternalEnergy1);
    }
    if !(params.eos2.energy_margin(v.p2) > 0.0) {
        return Err(Inadmissibility::InternalEnergy2);
    }
    Ok(())
}
