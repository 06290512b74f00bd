use crate::eos::{cons_to_prim, prim_to_cons, CellPrimitive, Conserved};

use super::flux::{flux_of, noncons_product, riemann_flux, wavespeed_of, Fluctuations, RiemannSolver};
use super::grid::{Boundary, CellField, Grid1D, GHOSTS};
use super::{FvError, PdePhysics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    #[default]
    MinMod,
    /// Zero slopes: the first-order Godunov-type scheme.
    Zero,
}

impl std::str::FromStr for Limiter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "minmod" => Ok(Limiter::MinMod),
            "zero" | "none" => Ok(Limiter::Zero),
            other => Err(format!("unknown limiter `{other}` (expected minmod or zero)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicConfig {
    pub cfl: f64,
    pub riemann: RiemannSolver,
    pub limiter: Limiter,
    pub boundary: Boundary,
    /// Transported volume fractions are clamped to `[alpha_min, 1 − alpha_min]`.
    pub alpha_min: f64,
}

impl Default for HyperbolicConfig {
    fn default() -> Self {
        Self {
            cfl: 0.95,
            riemann: RiemannSolver::Hllem,
            limiter: Limiter::MinMod,
            boundary: Boundary::Transmissive,
            alpha_min: 1e-12,
        }
    }
}

impl HyperbolicConfig {
    pub fn validate(&self) -> Result<(), FvError> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(FvError::InvalidConfig(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.alpha_min >= 0.0 && self.alpha_min < 0.5) {
            return Err(FvError::InvalidConfig(format!("alpha_min must lie in [0, 0.5), got {}", self.alpha_min)));
        }
        Ok(())
    }
}

/// `cfl dx / max_i (|u_k| + a_k)`.
pub fn stable_dt(field: &CellField, grid: &Grid1D, cfg: &HyperbolicConfig, phys: &PdePhysics) -> Result<f64, FvError> {
    let mut smax: f64 = 0.0;
    for (i, q) in field.interior().iter().enumerate() {
        let w = cons_to_prim(q, &phys.eos).map_err(|e| FvError::from_eos(Some(i), e))?;
        smax = smax.max(wavespeed_of(&w, &phys.eos));
    }
    if !(smax > 0.0 && smax.is_finite()) {
        return Err(FvError::InvalidConfig(format!("maximum wavespeed {smax:e} is not usable")));
    }
    Ok(cfg.cfl * grid.dx / smax)
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Boundary-extrapolated states of one cell, conserved and decoded.
#[derive(Clone, Copy)]
struct Faces {
    ql: Conserved,
    wl: CellPrimitive,
    qr: Conserved,
    wr: CellPrimitive,
}

impl Faces {
    fn flat(q: Conserved, w: CellPrimitive) -> Self {
        Self { ql: q, wl: w, qr: q, wr: w }
    }
}

/// Limited reconstruction followed by the half-step local evolution. Falls back
/// to a flat cell if the evolved face states are inadmissible.
fn evolved_faces(
    w: [&CellPrimitive; 3],
    q: &Conserved,
    half_ratio: f64,
    limiter: Limiter,
    phys: &PdePhysics,
) -> Result<Faces, FvError> {
    if limiter == Limiter::Zero {
        return Ok(Faces::flat(*q, *w[1]));
    }
    let (wm, wc, wp) = (w[0].to_array(), w[1].to_array(), w[2].to_array());
    let slope: [f64; 7] = std::array::from_fn(|k| minmod(wc[k] - wm[k], wp[k] - wc[k]));
    if slope.iter().all(|&s| s == 0.0) {
        return Ok(Faces::flat(*q, *w[1]));
    }
    let wl = CellPrimitive::from_array(std::array::from_fn(|k| wc[k] - 0.5 * slope[k]));
    let wr = CellPrimitive::from_array(std::array::from_fn(|k| wc[k] + 0.5 * slope[k]));
    let ql = prim_to_cons(&wl, &phys.eos);
    let qr = prim_to_cons(&wr, &phys.eos);
    let jump = flux_of(&qr, &wr) - flux_of(&ql, &wl) + noncons_product(&ql, &qr, &phys.eos, phys.closure)?;
    let ql = ql.axpy(-half_ratio, &jump);
    let qr = qr.axpy(-half_ratio, &jump);
    match (cons_to_prim(&ql, &phys.eos), cons_to_prim(&qr, &phys.eos)) {
        (Ok(wl), Ok(wr)) => Ok(Faces { ql, wl, qr, wr }),
        _ => Ok(Faces::flat(*q, *w[1])),
    }
}

/// Interior index of array cell `j` for error reporting.
fn interior_index(j: usize, n: usize) -> usize {
    j.saturating_sub(GHOSTS).min(n - 1)
}

/// One MUSCL–Hancock step of length `dt` for the homogeneous system.
///
/// A cell whose update is inadmissible is recomputed with HLL fluctuations on
/// its two interfaces, then additionally without reconstruction; the error is
/// returned only if both fail.
pub fn muscl_hancock_step(
    field: &CellField,
    grid: &Grid1D,
    dt: f64,
    cfg: &HyperbolicConfig,
    phys: &PdePhysics,
) -> Result<CellField, FvError> {
    hyperbolic_step(field, grid, dt, cfg, phys, Admissibility::PerPhase).map(|(f, _)| f)
}

/// What the updated cells of a hyperbolic step must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Admissibility {
    /// Every phase decodes.
    PerPhase,
    /// Volume fraction and masses are admissible and the mixture internal
    /// energy at the common velocity is positive; a phase energy may be
    /// negative until velocity relaxation removes the slip kinetic energy.
    Mixture,
}

fn check_mixture(q: &Conserved) -> Result<(), (&'static str, f64)> {
    let [m1, m2, mom1, mom2, e1, e2, a1] = q.0;
    if !q.is_finite() {
        return Err(("q", f64::NAN));
    }
    if !(a1 > 0.0 && a1 < 1.0) {
        return Err(("alpha1", a1));
    }
    if !(m1 > 0.0) {
        return Err(("alpha1*rho1", m1));
    }
    if !(m2 > 0.0) {
        return Err(("alpha2*rho2", m2));
    }
    let mom = mom1 + mom2;
    let internal = e1 + e2 - 0.5 * mom * mom / (m1 + m2);
    if !(internal > 0.0) {
        return Err(("mixture internal energy", internal));
    }
    Ok(())
}

pub(crate) fn hyperbolic_step(
    field: &CellField,
    grid: &Grid1D,
    dt: f64,
    cfg: &HyperbolicConfig,
    phys: &PdePhysics,
    admissibility: Admissibility,
) -> Result<(CellField, usize), FvError> {
    cfg.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FvError::BadTimeStep(dt));
    }
    let n = field.n_cells();
    if grid.n_cells != n {
        return Err(FvError::InvalidConfig(format!("grid has {} cells, field has {n}", grid.n_cells)));
    }
    let mut work = field.clone();
    work.fill_ghosts(cfg.boundary);
    let q = work.with_ghosts();
    let mut buf = SCRATCH.with(|s| s.take());
    let mut w = std::mem::take(&mut buf.w);
    w.clear();
    for (j, c) in q.iter().enumerate() {
        w.push(cons_to_prim(c, &phys.eos).map_err(|e| FvError::from_eos(Some(interior_index(j, n)), e))?);
    }

    let ratio = dt / grid.dx;
    let mut level = std::mem::take(&mut buf.level);
    level.clear();
    level.resize(n + 2 * GHOSTS, 0);
    let mut sweep = Sweep { q, w: &w, n, ratio, cfg, phys, level, faces: Vec::new(), fluct: Vec::new() };
    let mut faces = std::mem::take(&mut buf.faces);
    faces.clear();
    for j in 1..n + 2 * GHOSTS - 1 {
        faces.push(sweep.face_at(j)?);
    }
    sweep.faces = faces;
    let mut fluct = std::mem::take(&mut buf.fluct);
    fluct.clear();
    for k in 0..=n {
        fluct.push(sweep.fluct_at(k)?);
    }
    sweep.fluct = fluct;

    let mut updated = std::mem::take(&mut buf.updated);
    updated.clear();
    for i in 0..n {
        updated.push(sweep.update(i)?);
    }
    let check = |i: usize, u: &Conserved| -> Result<(), FvError> {
        match admissibility {
            Admissibility::PerPhase => cons_to_prim(u, &phys.eos).map(|_| ()).map_err(|e| FvError::from_eos(Some(i), e)),
            Admissibility::Mixture => check_mixture(u)
                .map_err(|(component, value)| FvError::Inadmissible { cell: Some(i), component, value }),
        }
    };
    let mut pending: Vec<usize> = (0..n).rev().filter(|&i| check(i, &updated[i]).is_err()).collect();
    let mut fallback = 0;
    while let Some(i) = pending.pop() {
        let err = match check(i, &updated[i]) {
            Ok(()) => continue,
            Err(e) => e,
        };
        let j = GHOSTS + i;
        if sweep.level[j] + 1 >= FALLBACK_LEVELS {
            return Err(err);
        }
        if sweep.level[j] == 0 {
            fallback += 1;
        }
        sweep.level[j] += 1;
        sweep.faces[j - 1] = sweep.face_at(j)?;
        sweep.fluct[i] = sweep.fluct_at(i)?;
        sweep.fluct[i + 1] = sweep.fluct_at(i + 1)?;
        for c in i.saturating_sub(1)..(i + 2).min(n) {
            updated[c] = sweep.update(c)?;
            if check(c, &updated[c]).is_err() && !pending.contains(&c) {
                pending.push(c);
            }
        }
    }

    let Sweep { level, faces, fluct, .. } = sweep;
    let mut out = work;
    out.interior_mut().copy_from_slice(&updated);
    out.fill_ghosts(cfg.boundary);
    SCRATCH.with(|s| s.replace(Scratch { w, level, faces, fluct, updated }));
    Ok((out, fallback))
}

/// Per-thread work arrays, kept between steps to avoid reallocating them.
#[derive(Default)]
struct Scratch {
    w: Vec<CellPrimitive>,
    level: Vec<u8>,
    faces: Vec<Faces>,
    fluct: Vec<Fluctuations>,
    updated: Vec<Conserved>,
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> = std::cell::RefCell::default();
}

/// Second order with the configured solver, second order with HLL, first
/// order with HLL.
const FALLBACK_LEVELS: u8 = 3;

struct Sweep<'a> {
    q: &'a [Conserved],
    w: &'a [CellPrimitive],
    n: usize,
    ratio: f64,
    cfg: &'a HyperbolicConfig,
    phys: &'a PdePhysics,
    /// Per array cell.
    level: Vec<u8>,
    /// `faces[j - 1]` for array cells `j = 1 ..= n + 2`.
    faces: Vec<Faces>,
    /// `fluct[k]` sits between array cells `GHOSTS - 1 + k` and `GHOSTS + k`.
    fluct: Vec<Fluctuations>,
}

impl Sweep<'_> {
    fn face_at(&self, j: usize) -> Result<Faces, FvError> {
        if self.level[j] >= 2 {
            return Ok(Faces::flat(self.q[j], self.w[j]));
        }
        let w = [&self.w[j - 1], &self.w[j], &self.w[j + 1]];
        evolved_faces(w, &self.q[j], 0.5 * self.ratio, self.cfg.limiter, self.phys)
            .map_err(|e| e.at_cell(interior_index(j, self.n)))
    }

    fn fluct_at(&self, k: usize) -> Result<Fluctuations, FvError> {
        let (ja, jb) = (GHOSTS - 1 + k, GHOSTS + k);
        let (a, b) = (&self.faces[ja - 1], &self.faces[jb - 1]);
        let solver = if self.level[ja].max(self.level[jb]) == 0 { self.cfg.riemann } else { RiemannSolver::Hll };
        riemann_flux(&a.qr, &a.wr, &b.ql, &b.wl, solver, &self.phys.eos, self.phys.closure)
            .map_err(|e| e.at_cell(interior_index(jb, self.n)))
    }

    fn update(&self, i: usize) -> Result<Conserved, FvError> {
        let j = GHOSTS + i;
        let f = &self.faces[j - 1];
        let mut total = self.fluct[i].d_plus + self.fluct[i + 1].d_minus;
        if f.ql != f.qr {
            total = total + flux_of(&f.qr, &f.wr) - flux_of(&f.ql, &f.wl)
                + noncons_product(&f.ql, &f.qr, &self.phys.eos, self.phys.closure).map_err(|e| e.at_cell(i))?;
        }
        let mut q = self.q[j].axpy(-self.ratio, &total);
        let a_min = self.cfg.alpha_min;
        if a_min > 0.0 && q.0[6].is_finite() {
            q.0[6] = q.0[6].clamp(a_min, 1.0 - a_min);
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::{EosPair, EosPhase, InterfaceClosure, InterfaceVelocity};

    fn physics() -> PdePhysics {
        PdePhysics {
            eos: EosPair::new(EosPhase::new(2.0, 2.0).unwrap(), EosPhase::new(1.4, 0.0).unwrap()),
            closure: InterfaceClosure::Impedance(InterfaceVelocity::Phase1),
            lambda: 0.0,
            nu: 0.0,
        }
    }

    fn state(alpha1: f64, rho1: f64, u: f64, p: f64) -> CellPrimitive {
        CellPrimitive { alpha1, rho1, rho2: 0.5 * rho1 + 0.1, u1: u, u2: 0.8 * u, p1: p, p2: 0.9 * p }
    }

    #[test]
    fn minmod_cases() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -2.0), 0.0);
        assert_eq!(minmod(0.0, 2.0), 0.0);
    }

    #[test]
    fn uniform_field_is_fixed_point() {
        let phys = physics();
        let grid = Grid1D::new(0.0, 1.0, 50).unwrap();
        let f = CellField::from_fn(&grid, &phys.eos, |_| state(0.3, 1.3, 0.7, 2.0));
        for riemann in [RiemannSolver::Rusanov, RiemannSolver::Hll, RiemannSolver::Hllem] {
            let cfg = HyperbolicConfig { riemann, ..Default::default() };
            let dt = stable_dt(&f, &grid, &cfg, &phys).unwrap();
            let g = muscl_hancock_step(&f, &grid, dt, &cfg, &phys).unwrap();
            assert_eq!(g.interior(), f.interior());
        }
    }

    #[test]
    fn periodic_uniform_alpha_conserves_totals() {
        let phys = physics();
        let grid = Grid1D::new(0.0, 1.0, 80).unwrap();
        let mut f = CellField::from_fn(&grid, &phys.eos, |x| {
            let s = (2.0 * std::f64::consts::PI * x).sin();
            CellPrimitive { alpha1: 0.4, rho1: 1.0 + 0.3 * s, rho2: 0.7 - 0.2 * s, u1: 0.5 * s, u2: -0.3, p1: 1.0 + 0.5 * s, p2: 1.2 }
        });
        for riemann in [RiemannSolver::Rusanov, RiemannSolver::Hll, RiemannSolver::Hllem] {
            let cfg = HyperbolicConfig { riemann, boundary: Boundary::Periodic, ..Default::default() };
            let start = f.totals(grid.dx);
            for _ in 0..100 {
                let dt = stable_dt(&f, &grid, &cfg, &phys).unwrap();
                f = muscl_hancock_step(&f, &grid, dt, &cfg, &phys).unwrap();
            }
            let end = f.totals(grid.dx);
            for k in 0..6 {
                let scale: f64 = f.interior().iter().map(|q| q.0[k].abs()).sum::<f64>() * grid.dx;
                assert!((end[k] - start[k]).abs() <= 1e-12 * scale, "{riemann} component {k}: {} vs {}", end[k], start[k]);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let phys = physics();
        let grid = Grid1D::new(0.0, 1.0, 10).unwrap();
        let f = CellField::from_fn(&grid, &phys.eos, |_| state(0.3, 1.3, 0.7, 2.0));
        assert!(matches!(muscl_hancock_step(&f, &grid, -1.0, &Default::default(), &phys), Err(FvError::BadTimeStep(_))));
        let cfg = HyperbolicConfig { cfl: 1.2, ..Default::default() };
        assert!(muscl_hancock_step(&f, &grid, 1e-3, &cfg, &phys).is_err());
        let other = Grid1D::new(0.0, 1.0, 12).unwrap();
        assert!(muscl_hancock_step(&f, &other, 1e-3, &Default::default(), &phys).is_err());
    }

    #[test]
    fn blow_up_names_cell() {
        let phys = physics();
        let grid = Grid1D::new(0.0, 1.0, 20).unwrap();
        let f = CellField::from_fn(&grid, &phys.eos, |x| {
            if x < 0.5 {
                state(0.5, 1.0, 0.0, 1000.0)
            } else {
                state(0.5, 1.0, 0.0, 1e-3)
            }
        });
        let err = muscl_hancock_step(&f, &grid, 0.05, &Default::default(), &phys).unwrap_err();
        match err {
            FvError::Inadmissible { cell: Some(i), .. } => assert!((5..15).contains(&i), "cell {i}"),
            other => panic!("unexpected {other}"),
        }
    }
}
