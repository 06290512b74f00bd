use crate::eos::{cons_to_prim, prim_to_cons, CellPrimitive, Conserved, EosPair};

use super::FvError;

/// Ghost cells on each side of a [`CellField`].
pub const GHOSTS: usize = 2;

/// Uniform grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self, FvError> {
        if n_cells < 4 {
            return Err(FvError::InvalidConfig(format!("need at least 4 cells, got {n_cells}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(FvError::InvalidConfig(format!("bad domain [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n_cells, dx: (x_max - x_min) / n_cells as f64 })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Transmissive,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "transmissive" => Ok(Boundary::Transmissive),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary `{other}` (expected transmissive or periodic)")),
        }
    }
}

/// Conserved states of the interior cells plus [`GHOSTS`] ghost cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    cells: Vec<Conserved>,
}

impl CellField {
    pub fn from_conserved(interior: &[Conserved]) -> Self {
        let mut cells = vec![Conserved::zero(); interior.len() + 2 * GHOSTS];
        cells[GHOSTS..GHOSTS + interior.len()].copy_from_slice(interior);
        let mut f = Self { cells };
        f.fill_ghosts(Boundary::Transmissive);
        f
    }

    /// Samples `init` at the cell centres.
    pub fn from_fn(grid: &Grid1D, eos: &EosPair, init: impl Fn(f64) -> CellPrimitive) -> Self {
        let interior: Vec<Conserved> = grid.centers().into_iter().map(|x| prim_to_cons(&init(x), eos)).collect();
        Self::from_conserved(&interior)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() - 2 * GHOSTS
    }

    pub fn interior(&self) -> &[Conserved] {
        &self.cells[GHOSTS..self.cells.len() - GHOSTS]
    }

    pub fn interior_mut(&mut self) -> &mut [Conserved] {
        let end = self.cells.len() - GHOSTS;
        &mut self.cells[GHOSTS..end]
    }

    /// All cells including ghosts.
    pub fn with_ghosts(&self) -> &[Conserved] {
        &self.cells
    }

    pub fn fill_ghosts(&mut self, boundary: Boundary) {
        let n = self.n_cells();
        for g in 0..GHOSTS {
            let (lo, hi) = match boundary {
                Boundary::Transmissive => (GHOSTS, GHOSTS + n - 1),
                Boundary::Periodic => (GHOSTS + n - GHOSTS + g, GHOSTS + g),
            };
            self.cells[g] = self.cells[lo];
            self.cells[GHOSTS + n + g] = self.cells[hi];
        }
    }

    /// Decodes every interior cell.
    pub fn primitives(&self, eos: &EosPair) -> Result<Vec<CellPrimitive>, FvError> {
        self.interior()
            .iter()
            .enumerate()
            .map(|(i, q)| cons_to_prim(q, eos).map_err(|e| FvError::from_eos(Some(i), e)))
            .collect()
    }

    /// `dx Σ Q_i` over the interior.
    pub fn totals(&self, dx: f64) -> [f64; 7] {
        let mut s = [0.0; 7];
        for q in self.interior() {
            for (a, b) in s.iter_mut().zip(q.0.iter()) {
                *a += b;
            }
        }
        s.map(|x| x * dx)
    }
}
