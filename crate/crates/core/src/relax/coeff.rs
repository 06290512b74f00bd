use super::linear::{build_linear_operator, LinearOperator};
use super::source::{source_rhs, Inadmissibility};
use crate::eos::{OdeParams, PrimitiveState};

/// Indicator vector summarising the linearised source at a state:
/// `[kp1, kp2, ku1 (u_I − u1), ku2 (u_I − u2), S(V) (5 components)]`.
///
/// `magnitudes` holds, per component, the sum of the absolute values of the
/// terms the component is assembled from. A component that is tiny next to
/// its own magnitude (a source crossing zero, a decayed velocity gap at
/// round-off level) carries no information about the linearisation, and
/// [`indicator_change`] floors its denominator accordingly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffVector {
    pub values: [f64; 9],
    pub magnitudes: [f64; 9],
}

impl CoeffVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(self.magnitudes.iter()).all(|x| x.is_finite())
    }

    fn from_operator(op: &LinearOperator, params: &OdeParams) -> Self {
        let v = &op.reference;
        let u_i = op.interface.u_i(v.u1, v.u2);
        let s = source_rhs(v, params);

        let (ka1, kb1) = (params.eos1.ka(), params.eos1.kb());
        let (ka2, kb2) = (params.eos2.ka(), params.eos2.kb());
        let p_i = op.interface.p_i.abs();
        let kp1_mag = params.nu * (p_i + ka1 * v.p1.abs() + kb1) / (v.alpha1 * ka1);
        let kp2_mag = params.nu * (p_i + ka2 * v.p2.abs() + kb2) / (v.alpha2() * ka2);
        let ku1_mag = op.ku1 * (u_i.abs() + v.u1.abs());
        let ku2_mag = op.ku2 * (u_i.abs() + v.u2.abs());
        let u_sum = v.u1.abs() + v.u2.abs();
        let p_sum = v.p1.abs() + v.p2.abs();

        CoeffVector {
            values: [op.kp1, op.kp2, op.ku1 * (u_i - v.u1), op.ku2 * (u_i - v.u2), s.u1, s.u2, s.p1, s.p2, s.alpha1],
            magnitudes: [
                kp1_mag,
                kp2_mag,
                ku1_mag,
                ku2_mag,
                params.lambda / params.m1 * u_sum,
                params.lambda / params.m2 * u_sum,
                kp1_mag * p_sum + ku1_mag * u_sum,
                kp2_mag * p_sum + ku2_mag * u_sum,
                params.nu * p_sum,
            ],
        }
    }
}

/// Linearisation indicator between two coefficient vectors:
/// `max_i |a_i − b_i| / (|a_i| + |b_i| + eps_abs + eps_rel (M^a_i + M^b_i))`
/// where `M` are the component magnitudes.
pub fn indicator_change(a: &CoeffVector, b: &CoeffVector, eps_abs: f64, eps_rel: f64) -> f64 {
    (0..9)
        .map(|i| {
            let (x, y) = (a.values[i], b.values[i]);
            let den = x.abs() + y.abs() + eps_abs + eps_rel * (a.magnitudes[i] + b.magnitudes[i]);
            if den > 0.0 {
                (x - y).abs() / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn coeff_vector(v_star: &PrimitiveState, params: &OdeParams) -> Result<CoeffVector, Inadmissibility> {
    linearise(v_star, params).map(|(_, c)| c)
}

/// Operator and indicator vector built together at `v_star`.
pub fn linearise(v_star: &PrimitiveState, params: &OdeParams) -> Result<(LinearOperator, CoeffVector), Inadmissibility> {
    let op = build_linear_operator(v_star, params)?;
    let c = CoeffVector::from_operator(&op, params);
    Ok((op, c))
}

/// `max_i |a_i − b_i| / (|a_i| + |b_i| + floor)`. Components where both
/// entries and the floor vanish contribute zero.
pub fn relative_change(a: &[f64], b: &[f64], floor: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let den = x.abs() + y.abs() + floor;
            if den > 0.0 {
                (x - y).abs() / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{EosPhase, InterfaceClosure};

    fn a1_params() -> OdeParams {
        OdeParams {
            m1: 1.0,
            m2: 4.0,
            eos1: EosPhase::new(6.0, 0.0).unwrap(),
            eos2: EosPhase::new(1.4, 0.0).unwrap(),
            lambda: 1e9,
            nu: 10.0,
            closure: InterfaceClosure::Simple,
        }
    }

    #[test]
    fn relative_change_examples() {
        assert_eq!(relative_change(&[1.0, -2.0], &[1.0, -2.0], 0.0), 0.0);
        assert_eq!(relative_change(&[1.0], &[0.0], 0.0), 1.0);
        assert!((relative_change(&[1.0, 2.0], &[1.0, 3.0], 1e-30) - 0.2).abs() < 1e-15);
        assert_eq!(relative_change(&[0.0], &[0.0], 0.0), 0.0);
        assert!(relative_change(&[1e300], &[-1e300], 0.0) <= 1.0);
    }

    #[test]
    fn equilibrium_sources_vanish() {
        let v = PrimitiveState::new(1.0, 1.0, 3.0, 3.0, 0.5);
        let c = coeff_vector(&v, &a1_params()).unwrap();
        assert!(c.values[4..].iter().all(|&x| x == 0.0));
        assert!(c.is_finite());
    }

    #[test]
    fn velocity_changes_leave_pressure_coupling() {
        let params = a1_params();
        let a = coeff_vector(&PrimitiveState::new(-5.0, 5.0, 0.1, 20.0, 0.9), &params).unwrap();
        let b = coeff_vector(&PrimitiveState::new(7.0, -1.0, 0.1, 20.0, 0.9), &params).unwrap();
        assert_eq!(a.values[0], b.values[0]);
        assert_eq!(a.values[1], b.values[1]);
    }

    #[test]
    fn first_component_matches_operator() {
        let params = a1_params();
        let v = PrimitiveState::new(-5.0, 5.0, 0.1, 20.0, 0.9);
        let c = coeff_vector(&v, &params).unwrap();
        let op = build_linear_operator(&v, &params).unwrap();
        assert_eq!(c.values[0], op.kp1);
        assert!((c.values[0] - 10.0 * 20.02 / 0.18).abs() < 1e-9);
    }

    #[test]
    fn floor_silences_cancelled_components() {
        let params = a1_params();
        let v = PrimitiveState::new(3.0, 3.0 + 1e-15, 1.0, 1.0, 0.5);
        let w = PrimitiveState::new(3.0, 3.0 - 1e-15, 1.0, 1.0, 0.5);
        let a = coeff_vector(&v, &params).unwrap();
        let b = coeff_vector(&w, &params).unwrap();
        assert!(indicator_change(&a, &b, 1e-30, 0.0) > 0.99);
        assert!(indicator_change(&a, &b, 1e-30, 1e-3) < 1e-9);
        assert_eq!(indicator_change(&a, &a, 0.0, 0.0), 0.0);
    }

    #[test]
    fn inadmissible_state_errors() {
        let v = PrimitiveState::new(0.0, 0.0, -1.0, 1.0, 0.5);
        assert_eq!(coeff_vector(&v, &a1_params()), Err(Inadmissibility::InternalEnergy1));
    }
}
