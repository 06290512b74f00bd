use rayon::prelude::*;

use crate::eos::{cons_to_prim, interface_weights, prim_to_cons, CellPrimitive, Conserved, OdeParams};
use crate::eos::EosPair;
use crate::relax::{build_linear_operator, integrate_prevalidated, SolverConfig, StepStats};

use super::grid::{CellField, Grid1D};
use super::scheme::{hyperbolic_step, Admissibility, HyperbolicConfig};
use super::{FvError, PdePhysics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    /// Hyperbolic step, then relaxation over the full step.
    #[default]
    Godunov,
    /// Half relaxation, hyperbolic step, half relaxation.
    Strang,
}

impl std::str::FromStr for Splitting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "godunov" => Ok(Splitting::Godunov),
            "strang" => Ok(Splitting::Strang),
            other => Err(format!("unknown splitting `{other}` (expected godunov or strang)")),
        }
    }
}

/// Per-step summary of the relaxation substep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitDiagnostics {
    /// Cells whose hyperbolic update fell back to a more diffusive flux.
    pub fallback_cells: usize,
    pub relax: StepStats,
    /// Cells that went through the ODE integrator.
    pub relaxed_cells: usize,
    /// Cells whose phase energies only became admissible after an exact
    /// drag substep.
    pub drag_first_cells: usize,
    /// Of those, cells that also needed their phase pressures reset to the
    /// mixture pressure.
    pub pressure_reset_cells: usize,
    /// Cells where the relaxation integrator failed under stiff pressure
    /// relaxation and the instantaneous equilibrium was used instead.
    pub equilibrium_cells: usize,
    /// `max |p1 − p2| / (|p1| + |p2|)` over the cells after the step.
    pub max_pressure_gap: f64,
}

impl SplitDiagnostics {
    /// Sums counts and keeps the larger pressure gap.
    pub fn absorb(&mut self, other: &SplitDiagnostics) {
        self.fallback_cells += other.fallback_cells;
        self.relax.merge(&other.relax);
        self.relaxed_cells += other.relaxed_cells;
        self.drag_first_cells += other.drag_first_cells;
        self.pressure_reset_cells += other.pressure_reset_cells;
        self.equilibrium_cells += other.equilibrium_cells;
        self.max_pressure_gap = self.max_pressure_gap.max(other.max_pressure_gap);
    }
}

fn pressure_gap(w: &CellPrimitive) -> f64 {
    let den = w.p1.abs() + w.p2.abs();
    if den > 0.0 {
        (w.p1 - w.p2).abs() / den
    } else {
        0.0
    }
}

struct CellOutcome {
    q: Conserved,
    /// Went through the ODE integrator.
    relaxed: bool,
    drag_first: bool,
    reset: bool,
    equilibrium: bool,
    gap: f64,
}

/// Drag-only relaxation over `dt`, solved exactly in conserved variables with
/// the interface velocity weight frozen at the initial state. Mixture momentum
/// and total energy are conserved; the work of the drag force moves energy
/// between the phases.
pub(crate) fn drag_conserved(q: &Conserved, dt: f64, phys: &PdePhysics) -> Conserved {
    let [m1, m2, mom1, mom2, e1, e2, a1] = q.0;
    let (u1, u2) = (mom1 / m1, mom2 / m2);
    let (rho1, rho2) = (m1 / a1, m2 / (1.0 - a1));
    let p1 = phys.eos.phase1.pressure((e1 - 0.5 * mom1 * u1) / a1);
    let p2 = phys.eos.phase2.pressure((e2 - 0.5 * mom2 * u2) / (1.0 - a1));
    let w1 = interface_weights(phys.closure, &phys.eos, rho1, rho2, p1, p2).w1;

    let total = m1 + m2;
    let shrink = (-phys.lambda * (1.0 / m1 + 1.0 / m2) * dt).exp_m1();
    let d0 = u1 - u2;
    let v1 = u1 + m2 / total * d0 * shrink;
    let v2 = u2 - m1 / total * d0 * shrink;
    // ∫ u_I dmom1 with u_I = w1 u1 + (1 − w1) u2 and dmom1 = m1 du1 = −m2 du2
    let work = 0.5 * (w1 * m1 * (v1 * v1 - u1 * u1) - (1.0 - w1) * m2 * (v2 * v2 - u2 * u2));
    Conserved([m1, m2, m1 * v1, m2 * v2, e1 + work, e2 - work, a1])
}

/// Equal phase pressures at frozen volume fraction and velocities, chosen so
/// the mixture internal energy is unchanged: the instantaneous limit of
/// pressure relaxation for a nearly absent phase.
pub(crate) fn pressure_reset(q: &Conserved, phys: &PdePhysics) -> Conserved {
    let [m1, m2, mom1, mom2, e1, e2, a1] = q.0;
    let a2 = 1.0 - a1;
    let (u1, u2) = (mom1 / m1, mom2 / m2);
    let (k1, k2) = (&phys.eos.phase1, &phys.eos.phase2);
    let rho_e = e1 + e2 - 0.5 * (mom1 * u1 + mom2 * u2);
    let p = (rho_e - a1 * k1.kb() - a2 * k2.kb()) / (a1 * k1.ka() + a2 * k2.ka());
    let w = CellPrimitive { alpha1: a1, rho1: m1 / a1, rho2: m2 / a2, u1, u2, p1: p, p2: p };
    prim_to_cons(&w, &phys.eos)
}

/// How an undecodable cell was brought back before the relaxation ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Repair {
    None,
    Drag,
    DragAndReset,
}

fn relax_one(
    q: &Conserved,
    dt: f64,
    phys: &PdePhysics,
    cfg: &SolverConfig,
    stats: &mut StepStats,
) -> Result<CellOutcome, FvError> {
    let (q, w, repair) = match cons_to_prim(q, &phys.eos) {
        Ok(w) => (*q, w, Repair::None),
        Err(e) if phys.lambda > 0.0 => {
            let dragged = drag_conserved(q, dt, phys);
            match cons_to_prim(&dragged, &phys.eos) {
                Ok(w) => (dragged, w, Repair::Drag),
                Err(_) if phys.nu > 0.0 => {
                    let reset = pressure_reset(&dragged, phys);
                    let w = cons_to_prim(&reset, &phys.eos).map_err(|_| FvError::from_eos(None, e))?;
                    (reset, w, Repair::DragAndReset)
                }
                Err(_) => return Err(FvError::from_eos(None, e)),
            }
        }
        Err(e) => return Err(FvError::from_eos(None, e)),
    };
    let drag_first = repair != Repair::None;
    let reset = repair == Repair::DragAndReset;
    let lambda = if drag_first { 0.0 } else { phys.lambda };
    let at_rest = w.u1 == w.u2 && w.p1 == w.p2;
    if at_rest || (phys.nu == 0.0 && lambda == 0.0) {
        return Ok(CellOutcome { q, relaxed: false, drag_first, reset, equilibrium: false, gap: pressure_gap(&w) });
    }
    let (m1, m2) = (q.0[0], q.0[1]);
    let params = OdeParams {
        m1,
        m2,
        eos1: phys.eos.phase1,
        eos2: phys.eos.phase2,
        lambda,
        nu: phys.nu,
        closure: phys.closure,
    };
    match integrate_prevalidated(&w.ode_state(), dt, &params, cfg, stats) {
        Ok(v) => {
            let w_new = CellPrimitive::from_ode_state(&v, m1, m2);
            Ok(CellOutcome {
                q: prim_to_cons(&w_new, &phys.eos),
                relaxed: true,
                drag_first,
                reset,
                equilibrium: false,
                gap: pressure_gap(&w_new),
            })
        }
        Err(source) if stiff_pressure(&w, &params, dt) => {
            let dragged = if lambda > 0.0 { drag_conserved(&q, dt, phys) } else { q };
            let start = cons_to_prim(&dragged, &phys.eos).map_err(|_| FvError::Relax { cell: 0, source: source.clone() })?;
            let w_new = pressure_equilibrium(&start, &phys.eos).ok_or(FvError::Relax { cell: 0, source })?;
            Ok(CellOutcome {
                q: prim_to_cons(&w_new, &phys.eos),
                relaxed: true,
                drag_first,
                reset,
                equilibrium: true,
                gap: pressure_gap(&w_new),
            })
        }
        Err(source) => Err(FvError::Relax { cell: 0, source }),
    }
}

/// Pressure relaxation counts as stiff when `(kp1 + kp2) dt` exceeds this.
const STIFF_PRESSURE: f64 = 1e3;

fn stiff_pressure(w: &CellPrimitive, params: &OdeParams, dt: f64) -> bool {
    build_linear_operator(&w.ode_state(), params).is_ok_and(|op| (op.kp1 + op.kp2) * dt >= STIFF_PRESSURE)
}

/// Infinitely fast pressure relaxation at fixed phase masses and velocities,
/// with the interface pressure taken equal to the final common pressure `p`:
/// each phase obeys `α_k (ρe_k(p)) − α_k⁰ ρe_k⁰ = −p (α_k − α_k⁰)`, which gives
/// `α_k = α_k⁰ (ρe_k⁰ + p) / ((k_a + 1) p + k_b)`, and `p` solves
/// `α_1 + α_2 = 1`. Mixture energy is conserved exactly. Returns `None` if
/// no admissible root exists.
pub(crate) fn pressure_equilibrium(w: &CellPrimitive, eos: &EosPair) -> Option<CellPrimitive> {
    let phases = [(w.alpha1, w.p1, &eos.phase1), (w.alpha2(), w.p2, &eos.phase2)];
    let alphas = |p: f64| {
        phases.map(|(a0, p0, k)| a0 * (k.internal_energy(p0) + p) / ((k.ka() + 1.0) * p + k.kb()))
    };
    let f = |p: f64| {
        let [a1, a2] = alphas(p);
        a1 + a2 - 1.0
    };
    // f decreases on p > −min Π from +∞ towards Σ α_k⁰/(k_a + 1) − 1 < 0
    let floor = -eos.phase1.pi_inf().min(eos.phase2.pi_inf());
    let scale = w.p1.abs().max(w.p2.abs()).max(eos.phase1.pi_inf()).max(eos.phase2.pi_inf()).max(1.0);
    let mut lo = floor;
    let mut hi = w.p1.max(w.p2).max(floor + scale);
    let mut grow = 0;
    while f(hi) > 0.0 {
        hi = floor + 2.0 * (hi - floor);
        grow += 1;
        if grow > 200 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = hi;
    let [a1, a2] = alphas(p);
    if !(a1 > 0.0 && a2 > 0.0 && a1 < 1.0) {
        return None;
    }
    let (m1, m2) = w.partial_densities();
    let out = CellPrimitive { alpha1: a1, rho1: m1 / a1, rho2: m2 / (1.0 - a1), u1: w.u1, u2: w.u2, p1: p, p2: p };
    let (ok1, ok2) = (eos.phase1.internal_energy(p) > 0.0, eos.phase2.internal_energy(p) > 0.0);
    (ok1 && ok2).then_some(out)
}

/// Integrates the relaxation sources over `dt` in every interior cell, with
/// the phase masses frozen. Unless `cfg.dt0` is set the inner solver first
/// attempts the whole substep.
///
/// With drag active, a cell whose phase energies do not decode (slip kinetic
/// energy of a nearly absent phase exceeding its internal energy) first
/// receives the exact drag solution over `dt`. If it still does not decode and
/// pressure relaxation is active, its phase pressures are reset to the
/// mixture pressure before the ODE runs.
pub fn relax_cells(
    field: &mut CellField,
    dt: f64,
    phys: &PdePhysics,
    cfg: &SolverConfig,
) -> Result<SplitDiagnostics, FvError> {
    let mut cfg = *cfg;
    if cfg.dt0.is_none() {
        cfg.dt0 = Some(dt);
    }
    // Checked once here; every decoded cell has positive phase masses.
    cfg.validate().map_err(|e| FvError::InvalidConfig(e.to_string()))?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FvError::BadTimeStep(dt));
    }
    if !(phys.lambda >= 0.0 && phys.lambda.is_finite() && phys.nu >= 0.0 && phys.nu.is_finite()) {
        return Err(FvError::InvalidConfig(format!("lambda = {:e}, nu = {:e}", phys.lambda, phys.nu)));
    }
    let relax_chunk = |(c, chunk): (usize, &mut [Conserved])| -> (SplitDiagnostics, Option<FvError>) {
        let mut diag = SplitDiagnostics::default();
        for (j, cell) in chunk.iter_mut().enumerate() {
            match relax_one(cell, dt, phys, &cfg, &mut diag.relax) {
                Ok(outcome) => {
                    *cell = outcome.q;
                    diag.max_pressure_gap = diag.max_pressure_gap.max(outcome.gap);
                    diag.drag_first_cells += usize::from(outcome.drag_first);
                    diag.pressure_reset_cells += usize::from(outcome.reset);
                    diag.equilibrium_cells += usize::from(outcome.equilibrium);
                    diag.relaxed_cells += usize::from(outcome.relaxed);
                }
                Err(e) => {
                    let i = c * RELAX_CHUNK + j;
                    let e = match e {
                        FvError::Relax { source, .. } => FvError::Relax { cell: i, source },
                        other => other.at_cell(i),
                    };
                    return (diag, Some(e));
                }
            }
        }
        (diag, None)
    };
    // Chunks are reduced in index order, so the reported error is the lowest failing cell.
    let results: Vec<_> = field.interior_mut().par_chunks_mut(RELAX_CHUNK).enumerate().map(relax_chunk).collect();
    let mut diag = SplitDiagnostics::default();
    for (d, err) in results {
        if let Some(e) = err {
            return Err(e);
        }
        diag.absorb(&d);
    }
    Ok(diag)
}

const RELAX_CHUNK: usize = 256;

fn admissibility(phys: &PdePhysics) -> Admissibility {
    if phys.lambda > 0.0 {
        Admissibility::Mixture
    } else {
        Admissibility::PerPhase
    }
}

/// Advances the full system by `dt` with operator splitting.
#[allow(clippy::too_many_arguments)]
pub fn split_advance(
    field: &CellField,
    grid: &Grid1D,
    dt: f64,
    hyp: &HyperbolicConfig,
    phys: &PdePhysics,
    relax: &SolverConfig,
    splitting: Splitting,
) -> Result<(CellField, SplitDiagnostics), FvError> {
    match splitting {
        Splitting::Godunov => {
            let (mut next, fallback) = hyperbolic_step(field, grid, dt, hyp, phys, admissibility(phys))?;
            let mut diag = relax_cells(&mut next, dt, phys, relax)?;
            diag.fallback_cells = fallback;
            next.fill_ghosts(hyp.boundary);
            Ok((next, diag))
        }
        Splitting::Strang => {
            let mut half = field.clone();
            let mut diag = relax_cells(&mut half, 0.5 * dt, phys, relax)?;
            half.fill_ghosts(hyp.boundary);
            let (mut next, fallback) = hyperbolic_step(&half, grid, dt, hyp, phys, admissibility(phys))?;
            diag.fallback_cells = fallback;
            let second = relax_cells(&mut next, 0.5 * dt, phys, relax)?;
            next.fill_ghosts(hyp.boundary);
            diag.relax.merge(&second.relax);
            diag.relaxed_cells += second.relaxed_cells;
            diag.drag_first_cells += second.drag_first_cells;
            diag.pressure_reset_cells += second.pressure_reset_cells;
            diag.equilibrium_cells += second.equilibrium_cells;
            diag.max_pressure_gap = second.max_pressure_gap;
            Ok((next, diag))
        }
    }
}
