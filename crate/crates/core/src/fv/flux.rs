//! Fluxes, non-conservative products and approximate Riemann solvers.

use crate::eos::{cons_to_prim, interface_weights, sound_speed_floored, CellPrimitive, Conserved, EosPair, InterfaceClosure};

use super::FvError;

/// Riemann solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RiemannSolver {
    Rusanov,
    Hll,
    #[default]
    Hllem,
}

impl std::str::FromStr for RiemannSolver {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rusanov" => Ok(RiemannSolver::Rusanov),
            "hll" => Ok(RiemannSolver::Hll),
            "hllem" => Ok(RiemannSolver::Hllem),
            other => Err(format!("unknown Riemann solver `{other}` (expected rusanov, hll or hllem)")),
        }
    }
}

impl std::fmt::Display for RiemannSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RiemannSolver::Rusanov => "rusanov",
            RiemannSolver::Hll => "hll",
            RiemannSolver::Hllem => "hllem",
        })
    }
}

/// Flux of a decoded cell; `q` must encode `w`.
pub(crate) fn flux_of(q: &Conserved, w: &CellPrimitive) -> Conserved {
    let [_, _, mom1, mom2, e1, e2, a1] = q.0;
    let a2 = 1.0 - a1;
    Conserved([
        mom1,
        mom2,
        mom1 * w.u1 + a1 * w.p1,
        mom2 * w.u2 + a2 * w.p2,
        (e1 + a1 * w.p1) * w.u1,
        (e2 + a2 * w.p2) * w.u2,
        0.0,
    ])
}

/// Conservative flux `F(Q)` of the seven-equation system in one dimension.
pub fn physical_flux(q: &Conserved, eos: &EosPair) -> Result<Conserved, FvError> {
    let w = cons_to_prim(q, eos).map_err(|e| FvError::from_eos(None, e))?;
    Ok(flux_of(q, &w))
}

/// `max_k |u_k| + a_k` of a conserved state.
pub fn max_wavespeed(q: &Conserved, eos: &EosPair) -> Result<f64, FvError> {
    let w = cons_to_prim(q, eos).map_err(|e| FvError::from_eos(None, e))?;
    Ok(wavespeed_of(&w, eos))
}

pub(crate) fn wavespeed_of(w: &CellPrimitive, eos: &EosPair) -> f64 {
    let a1 = sound_speed_floored(w.rho1, w.p1, &eos.phase1);
    let a2 = sound_speed_floored(w.rho2, w.p2, &eos.phase2);
    (w.u1.abs() + a1).max(w.u2.abs() + a2)
}

const GAUSS3_NODES: [f64; 3] = [0.5 - 0.387_298_334_620_741_7, 0.5, 0.5 + 0.387_298_334_620_741_7];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// `∫₀¹ B(Φ(s)) Φ'(s) ds` along the straight segment from `ql` to `qr` in
/// conserved variables, by three-point Gauss quadrature.
pub fn noncons_product(
    ql: &Conserved,
    qr: &Conserved,
    eos: &EosPair,
    closure: InterfaceClosure,
) -> Result<Conserved, FvError> {
    let dalpha = qr.0[6] - ql.0[6];
    if dalpha == 0.0 {
        return Ok(Conserved::zero());
    }
    let dq = *qr - *ql;
    let mut p_i = 0.0;
    let mut pu_i = 0.0;
    let mut u_i = 0.0;
    for (s, wgt) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS.iter()) {
        let q = ql.axpy(*s, &dq);
        let w = cons_to_prim(&q, eos).map_err(|e| FvError::from_eos(None, e))?;
        let iw = interface_weights(closure, eos, w.rho1, w.rho2, w.p1, w.p2);
        let ui = iw.u_i(w.u1, w.u2);
        p_i += wgt * iw.p_i;
        pu_i += wgt * iw.p_i * ui;
        u_i += wgt * ui;
    }
    Ok(Conserved([0.0, 0.0, -p_i * dalpha, p_i * dalpha, -pu_i * dalpha, pu_i * dalpha, u_i * dalpha]))
}

/// Numerical flux and path-conservative fluctuations at one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fluctuations {
    /// Conservative part of the numerical flux.
    pub flux: Conserved,
    /// Contribution to the cell on the left.
    pub d_minus: Conserved,
    /// Contribution to the cell on the right.
    pub d_plus: Conserved,
}

/// Davis estimates over both phases and both sides.
pub fn wavespeed_bounds(wl: &CellPrimitive, wr: &CellPrimitive, eos: &EosPair) -> (f64, f64) {
    let speeds = |w: &CellPrimitive| {
        let a1 = sound_speed_floored(w.rho1, w.p1, &eos.phase1);
        let a2 = sound_speed_floored(w.rho2, w.p2, &eos.phase2);
        ((w.u1 - a1).min(w.u2 - a2), (w.u1 + a1).max(w.u2 + a2))
    };
    let (l1, r1) = speeds(wl);
    let (l2, r2) = speeds(wr);
    (l1.min(l2), r1.max(r2))
}

/// Conserved-variable jump produced by a unit volume-fraction jump at fixed
/// phase densities, velocities and pressures.
fn alpha_eigenvector(w: &CellPrimitive, eos: &EosPair) -> Conserved {
    let e1 = eos.phase1.internal_energy(w.p1) + 0.5 * w.rho1 * w.u1 * w.u1;
    let e2 = eos.phase2.internal_energy(w.p2) + 0.5 * w.rho2 * w.u2 * w.u2;
    Conserved([w.rho1, -w.rho2, w.rho1 * w.u1, -w.rho2 * w.u2, e1, -e2, 1.0])
}

fn average(wl: &CellPrimitive, wr: &CellPrimitive) -> CellPrimitive {
    let (a, b) = (wl.to_array(), wr.to_array());
    CellPrimitive::from_array(std::array::from_fn(|i| 0.5 * (a[i] + b[i])))
}

/// Fluctuations for the states `ql`/`wl` and `qr`/`wr` (conserved and decoded).
#[allow(clippy::too_many_arguments)]
pub fn riemann_flux(
    ql: &Conserved,
    wl: &CellPrimitive,
    qr: &Conserved,
    wr: &CellPrimitive,
    solver: RiemannSolver,
    eos: &EosPair,
    closure: InterfaceClosure,
) -> Result<Fluctuations, FvError> {
    let fl = flux_of(ql, wl);
    let fr = flux_of(qr, wr);
    let dq = *qr - *ql;
    let bq = noncons_product(ql, qr, eos, closure)?;
    let adq = fr - fl + bq;
    let (sl, sr) = wavespeed_bounds(wl, wr, eos);

    let out = match solver {
        RiemannSolver::Rusanov => {
            let s = sl.abs().max(sr.abs());
            let half_adq = adq * 0.5;
            let diss = dq * (0.5 * s);
            Fluctuations {
                flux: (fl + fr) * 0.5 - diss,
                d_minus: half_adq - diss,
                d_plus: half_adq + diss,
            }
        }
        RiemannSolver::Hll | RiemannSolver::Hllem => {
            let sl = sl.min(0.0);
            let sr = sr.max(0.0);
            let inv = 1.0 / (sr - sl);
            let mut flux = (fl * sr - fr * sl + dq * (sl * sr)) * inv;
            let mut d_minus = (dq * sr - adq) * (sl * inv);
            let mut d_plus = (adq - dq * sl) * (sr * inv);
            if solver == RiemannSolver::Hllem {
                let dalpha = dq.0[6];
                if dalpha != 0.0 && sl < 0.0 && sr > 0.0 {
                    let wa = average(wl, wr);
                    let iw = interface_weights(closure, eos, wa.rho1, wa.rho2, wa.p1, wa.p2);
                    let u_i = iw.u_i(wa.u1, wa.u2);
                    let delta = (1.0 - u_i.min(0.0) / sl - u_i.max(0.0) / sr).clamp(0.0, 1.0);
                    // anti-diffusion amount per component, kept between 0 and the
                    // actual jump so it never exceeds the HLL dissipation
                    let r = alpha_eigenvector(&wa, eos);
                    let amount: [f64; 7] = std::array::from_fn(|k| {
                        let a = delta * r.0[k] * dalpha;
                        let j = dq.0[k];
                        if a * j <= 0.0 {
                            0.0
                        } else if a.abs() > j.abs() {
                            j
                        } else {
                            a
                        }
                    });
                    let corr = Conserved(amount) * (sl * sr * inv);
                    flux = flux - corr;
                    d_minus = d_minus - corr;
                    d_plus = d_plus + corr;
                }
            }
            Fluctuations { flux, d_minus, d_plus }
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{prim_to_cons, EosPhase, InterfaceVelocity};

    fn rp3_eos() -> EosPair {
        EosPair::new(EosPhase::new(2.0, 2.0).unwrap(), EosPhase::new(1.4, 0.0).unwrap())
    }

    const IMP: InterfaceClosure = InterfaceClosure::Impedance(InterfaceVelocity::Phase1);

    fn rp3_left() -> CellPrimitive {
        CellPrimitive { alpha1: 0.55, rho1: 1.0, rho2: 0.2, u1: 0.0, u2: 0.0, p1: 1.0, p2: 1.0 }
    }

    fn moving() -> CellPrimitive {
        CellPrimitive { alpha1: 0.3, rho1: 2.0, rho2: 0.5, u1: 1.5, u2: -0.7, p1: 3.0, p2: 1.2 }
    }

    #[test]
    fn rest_state_flux() {
        let eos = rp3_eos();
        let w = rp3_left();
        let f = physical_flux(&prim_to_cons(&w, &eos), &eos).unwrap();
        let expect = [0.0, 0.0, 0.55, 0.45, 0.0, 0.0, 0.0];
        for (x, y) in f.0.iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn rp3_wavespeed() {
        let eos = rp3_eos();
        let s = max_wavespeed(&prim_to_cons(&rp3_left(), &eos), &eos).unwrap();
        // a1 = sqrt(2 (1 + 2)/1), a2 = sqrt(1.4/0.2)
        assert!((s - 7f64.sqrt()).abs() < 1e-14);
        assert!(6f64.sqrt() < s);
    }

    #[test]
    fn identical_phases_give_single_phase_speed() {
        let air = EosPhase::new(1.4, 0.0).unwrap();
        let eos = EosPair::new(air, air);
        let w = CellPrimitive { alpha1: 0.4, rho1: 1.2, rho2: 1.2, u1: 3.0, u2: 3.0, p1: 1e5, p2: 1e5 };
        assert!((wavespeed_of(&w, &eos) - (3.0 + (1.4f64 * 1e5 / 1.2).sqrt())).abs() < 1e-10);
    }

    #[test]
    fn velocity_shift_bounds_wavespeed_change() {
        let eos = rp3_eos();
        let w = moving();
        for c in [0.0, 0.3, 2.0, 40.0] {
            let shifted = CellPrimitive { u1: w.u1 + c, u2: w.u2 + c, ..w };
            assert!(wavespeed_of(&shifted, &eos) <= wavespeed_of(&w, &eos) + c + 1e-12);
        }
    }

    fn quasi_linear_matrix(q: &Conserved, eos: &EosPair) -> nalgebra::SMatrix<f64, 7, 7> {
        let mut a = nalgebra::SMatrix::<f64, 7, 7>::zeros();
        for j in 0..7 {
            let h = 1e-6 * q.0[j].abs().max(1e-3);
            let mut qp = *q;
            let mut qm = *q;
            qp.0[j] += h;
            qm.0[j] -= h;
            let fp = physical_flux(&qp, eos).unwrap();
            let fm = physical_flux(&qm, eos).unwrap();
            for i in 0..7 {
                a[(i, j)] = (fp.0[i] - fm.0[i]) / (2.0 * h);
            }
        }
        let w = cons_to_prim(q, eos).unwrap();
        let iw = interface_weights(IMP, eos, w.rho1, w.rho2, w.p1, w.p2);
        let ui = iw.u_i(w.u1, w.u2);
        let col = [0.0, 0.0, -iw.p_i, iw.p_i, -iw.p_i * ui, iw.p_i * ui, ui];
        for (i, c) in col.iter().enumerate() {
            a[(i, 6)] += c;
        }
        a
    }

    #[test]
    fn characteristic_speeds_bounded_by_wavespeed() {
        let eos = rp3_eos();
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let w = CellPrimitive {
                alpha1: 0.05 + 0.9 * next(),
                rho1: 0.1 + 5.0 * next(),
                rho2: 0.1 + 5.0 * next(),
                u1: 4.0 * next() - 2.0,
                u2: 4.0 * next() - 2.0,
                p1: 0.1 + 5.0 * next(),
                p2: 0.1 + 5.0 * next(),
            };
            let q = prim_to_cons(&w, &eos);
            let s = max_wavespeed(&q, &eos).unwrap();
            for ev in quasi_linear_matrix(&q, &eos).complex_eigenvalues().iter() {
                assert!(ev.re.abs() <= s * (1.0 + 1e-6), "{ev} vs {s} at {w:?}");
            }
        }
    }

    #[test]
    fn noncons_vanishes_without_alpha_jump() {
        let eos = rp3_eos();
        let a = prim_to_cons(&rp3_left(), &eos);
        let b = prim_to_cons(&CellPrimitive { rho1: 3.0, p2: 4.0, ..rp3_left() }, &eos);
        assert_eq!(noncons_product(&a, &b, &eos, IMP).unwrap(), Conserved::zero());
        assert_eq!(noncons_product(&a, &a, &eos, IMP).unwrap(), Conserved::zero());
    }

    #[test]
    fn noncons_simple_closure_exact_for_linear_path() {
        // with p_I = p2 and u_I = u1 constant along the path the quadrature is exact
        let eos = rp3_eos();
        let wl = CellPrimitive { alpha1: 0.3, rho1: 1.0, rho2: 1.0, u1: 2.0, u2: 2.0, p1: 1.0, p2: 1.0 };
        let wr = CellPrimitive { alpha1: 0.6, ..wl };
        let b = noncons_product(&prim_to_cons(&wl, &eos), &prim_to_cons(&wr, &eos), &eos, InterfaceClosure::Simple)
            .unwrap();
        let expect = [0.0, 0.0, -0.3, 0.3, -0.6, 0.6, 0.6];
        for (x, y) in b.0.iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-14, "{:?}", b.0);
        }
    }

    #[test]
    fn riemann_consistency() {
        let eos = rp3_eos();
        let w = moving();
        let q = prim_to_cons(&w, &eos);
        for solver in [RiemannSolver::Rusanov, RiemannSolver::Hll, RiemannSolver::Hllem] {
            let f = riemann_flux(&q, &w, &q, &w, solver, &eos, IMP).unwrap();
            let exact = flux_of(&q, &w);
            for (x, y) in f.flux.0.iter().zip(exact.0.iter()) {
                assert!((x - y).abs() <= 1e-14 * y.abs(), "{solver}: {x} vs {y}");
            }
            assert_eq!(f.d_minus, Conserved::zero());
            assert_eq!(f.d_plus, Conserved::zero());
        }
    }

    #[test]
    fn supersonic_left_moving_upwinds_right_state() {
        let eos = rp3_eos();
        let wl = CellPrimitive { u1: -50.0, u2: -50.0, ..moving() };
        let wr = CellPrimitive { u1: -60.0, u2: -55.0, p1: 2.0, ..moving() };
        let (ql, qr) = (prim_to_cons(&wl, &eos), prim_to_cons(&wr, &eos));
        let f = riemann_flux(&ql, &wl, &qr, &wr, RiemannSolver::Hll, &eos, IMP).unwrap();
        let fr = flux_of(&qr, &wr);
        for (x, y) in f.flux.0.iter().zip(fr.0.iter()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        assert_eq!(f.d_plus, Conserved::zero());
    }

    #[test]
    fn fluctuations_sum_to_path_jump() {
        let eos = rp3_eos();
        let wl = moving();
        let wr = CellPrimitive { alpha1: 0.6, rho1: 1.1, u2: 0.4, p1: 2.0, ..moving() };
        let (ql, qr) = (prim_to_cons(&wl, &eos), prim_to_cons(&wr, &eos));
        let adq = flux_of(&qr, &wr) - flux_of(&ql, &wl) + noncons_product(&ql, &qr, &eos, IMP).unwrap();
        for solver in [RiemannSolver::Rusanov, RiemannSolver::Hll, RiemannSolver::Hllem] {
            let f = riemann_flux(&ql, &wl, &qr, &wr, solver, &eos, IMP).unwrap();
            let sum = f.d_minus + f.d_plus;
            for (x, y) in sum.0.iter().zip(adq.0.iter()) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{solver}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn solver_names_parse() {
        assert_eq!("HLLEM".parse::<RiemannSolver>().unwrap(), RiemannSolver::Hllem);
        assert!("roe".parse::<RiemannSolver>().is_err());
    }
}
