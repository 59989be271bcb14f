use crate::{Complex64, DoaError, Result};

/// Grid of `M` candidate bins `w ∈ {-M/2, …, M/2-1}`, each owning `L` taps at
/// the circular offsets `δ ∈ {-(L-1)/2, …, (L-1)/2}`.
///
/// Encodes the sensing matrix `V` (M × ML) without storing it: column
/// `(m', l)` has a single 1 at row `row_of(m', l) = (w_{m'} + δ_l) mod M`.
/// All indices are 0-based; grid slot `m'` holds `w = m' - M/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridDecomposition {
    m: usize,
    l: usize,
    offsets: Vec<i64>,
    row_of: Vec<usize>,
    grid_of: Vec<usize>,
}

pub fn build_grid(m: usize, l: usize) -> Result<GridDecomposition> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(DoaError::Geometry(format!("M must be even and >= 2, got {m}")));
    }
    if l.is_multiple_of(2) || l >= m {
        return Err(DoaError::Geometry(format!("L must be odd and < M, got L={l}, M={m}")));
    }
    let half_l = (l as i64 - 1) / 2;
    let mi = m as i64;
    let offsets: Vec<i64> = (-half_l..=half_l).collect();

    let mut row_of = vec![0usize; m * l];
    let mut grid_of = vec![0usize; m * l];
    for mp in 0..m {
        let w = mp as i64 - mi / 2;
        for (slot, &delta) in offsets.iter().enumerate() {
            let row = (w + delta).rem_euclid(mi) as usize;
            row_of[mp * l + slot] = row;
            grid_of[row * l + slot] = mp;
        }
    }
    Ok(GridDecomposition { m, l, offsets, row_of, grid_of })
}

impl GridDecomposition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    /// Bin value `w` of grid slot `m'`.
    pub fn w_of(&self, grid_index: usize) -> i64 {
        grid_index as i64 - (self.m / 2) as i64
    }

    /// Grid slot holding bin `w` (taken mod M).
    pub fn index_of_w(&self, w: i64) -> usize {
        (w + (self.m / 2) as i64).rem_euclid(self.m as i64) as usize
    }

    #[inline]
    pub fn row_of(&self, grid_index: usize, slot: usize) -> usize {
        self.row_of[grid_index * self.l + slot]
    }

    #[inline]
    pub fn grid_of(&self, row: usize, slot: usize) -> usize {
        self.grid_of[row * self.l + slot]
    }

    /// Circular distance between two grid slots.
    pub fn circular_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.m - d)
    }

    /// Dense `M × ML` sensing matrix, row-major. Intended for verification on
    /// small sizes only.
    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        let mut v = vec![vec![0.0; self.m * self.l]; self.m];
        for mp in 0..self.m {
            for slot in 0..self.l {
                v[self.row_of(mp, slot)][mp * self.l + slot] = 1.0;
            }
        }
        v
    }
}

/// `y = V x` for `x` stacked block-wise (`x[m' * L + l]`).
pub fn apply_sensing(grid: &GridDecomposition, x: &[Complex64]) -> Result<Vec<Complex64>> {
    let (m, l) = (grid.m, grid.l);
    if x.len() != m * l {
        return Err(DoaError::LengthMismatch { expected: m * l, got: x.len() });
    }
    Ok((0..m)
        .map(|row| (0..l).map(|slot| x[grid.grid_of(row, slot) * l + slot]).sum())
        .collect())
}
