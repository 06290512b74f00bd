//! Built-in test problems.

use std::fmt;
use std::str::FromStr;

use crate::eos::{CellPrimitive, EosPair, EosPhase, InterfaceClosure, InterfaceVelocity, OdeParams, PrimitiveState};
use crate::fv::{PdePhysics, RiemannProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    A1,
    A2,
    Rp1,
    Rp2,
    Rp3,
    /// Relaxation ODE built from configuration keys, starting from the A1 values.
    CustomOde,
    /// Riemann problem built from configuration keys, starting from the RP3 values.
    CustomRp,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 7] = [
        ProblemKind::A1,
        ProblemKind::A2,
        ProblemKind::Rp1,
        ProblemKind::Rp2,
        ProblemKind::Rp3,
        ProblemKind::CustomOde,
        ProblemKind::CustomRp,
    ];

    pub fn is_ode(self) -> bool {
        matches!(self, ProblemKind::A1 | ProblemKind::A2 | ProblemKind::CustomOde)
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::A1 => "A1",
            ProblemKind::A2 => "A2",
            ProblemKind::Rp1 => "RP1",
            ProblemKind::Rp2 => "RP2",
            ProblemKind::Rp3 => "RP3",
            ProblemKind::CustomOde => "custom-ode",
            ProblemKind::CustomRp => "custom-rp",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = ProblemKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown problem `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A relaxation ODE run: initial state, frozen parameters and final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeProblem {
    pub initial: PrimitiveState,
    pub params: OdeParams,
    pub t_end: f64,
}

fn phase(gamma: f64, pi_inf: f64) -> EosPhase {
    EosPhase::new(gamma, pi_inf).expect("preset EOS parameters are valid")
}

pub fn a1() -> OdeProblem {
    OdeProblem {
        initial: PrimitiveState::new(-5.0, 5.0, 0.1, 20.0, 0.9),
        params: OdeParams {
            m1: 1.0,
            m2: 4.0,
            eos1: phase(6.0, 0.0),
            eos2: phase(1.4, 0.0),
            lambda: 1e9,
            nu: 10.0,
            closure: InterfaceClosure::Simple,
        },
        t_end: 1e-3,
    }
}

pub fn a2() -> OdeProblem {
    OdeProblem {
        initial: PrimitiveState::new(0.0, 0.0, 2e8, 1.0, 0.4),
        params: OdeParams {
            m1: 780.0,
            m2: 0.22,
            eos1: phase(6.0, 100.0),
            eos2: phase(1.4, 0.0),
            lambda: 1e9,
            nu: 10.0,
            closure: InterfaceClosure::Simple,
        },
        t_end: 1e-3,
    }
}

const IMPEDANCE: InterfaceClosure = InterfaceClosure::Impedance(InterfaceVelocity::Phase1);

/// Liquid–vapour dodecane shock tube.
pub fn rp1() -> RiemannProblem {
    let state = |alpha1: f64, p: f64| CellPrimitive { alpha1, rho1: 500.0, rho2: 2.0, u1: 0.0, u2: 0.0, p1: p, p2: p };
    RiemannProblem {
        name: "rp1".into(),
        left: state(1.0 - 1e-8, 1e8),
        right: state(1e-8, 1e5),
        x_min: 0.0,
        x_max: 1.0,
        x_jump: 0.75,
        t_end: 473e-6,
        physics: PdePhysics {
            eos: EosPair::new(phase(2.35, 4e8), phase(1.025, 0.0)),
            closure: IMPEDANCE,
            lambda: 1e9,
            nu: 1e20,
        },
    }
}

/// Two diverging rarefactions in liquid water.
pub fn rp2() -> RiemannProblem {
    let state = |u: f64| CellPrimitive { alpha1: 0.99, rho1: 1150.0, rho2: 0.63, u1: u, u2: u, p1: 1e5, p2: 1e5 };
    RiemannProblem {
        name: "rp2".into(),
        left: state(-2.0),
        right: state(2.0),
        x_min: 0.0,
        x_max: 1.0,
        x_jump: 0.5,
        t_end: 3.2e-3,
        physics: PdePhysics {
            eos: EosPair::new(phase(2.35, 1e9), phase(1.43, 0.0)),
            closure: IMPEDANCE,
            lambda: 1e9,
            nu: 1e20,
        },
    }
}

/// Pressure relaxation without drag; `nu` is swept.
pub fn rp3() -> RiemannProblem {
    RiemannProblem {
        name: "rp3".into(),
        left: CellPrimitive { alpha1: 0.55, rho1: 1.0, rho2: 0.2, u1: 0.0, u2: 0.0, p1: 1.0, p2: 1.0 },
        right: CellPrimitive { alpha1: 0.45, rho1: 0.125, rho2: 2.0, u1: 0.0, u2: 0.0, p1: 0.1, p2: 0.1 },
        x_min: 0.0,
        x_max: 1.0,
        x_jump: 0.6,
        t_end: 0.15,
        physics: PdePhysics { eos: EosPair::new(phase(2.0, 2.0), phase(1.4, 0.0)), closure: IMPEDANCE, lambda: 0.0, nu: 1e20 },
    }
}

/// `ν` values of the RP3 sweep.
pub const RP3_NU_SWEEP: [f64; 3] = [1e-8, 1.0, 1e20];
