use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const ROW_HEIGHT: f64 = 0.866_025_403_784_438_6; // sqrt(3)/2

/// Hexagonal lattice with unit spacing between neighbouring neuron centres.
///
/// Neuron `i` sits at row `i / cols`, column `i % cols`; odd rows are shifted
/// half a cell to the right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexGrid {
    pub rows: usize,
    pub cols: usize,
}

impl HexGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("grid {rows}x{cols} has no neurons")));
        }
        Ok(HexGrid { rows, cols })
    }

    /// Most square `rows x cols` sheet with `rows <= cols` and `rows * cols == size`.
    pub fn for_size(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("map size must be positive"));
        }
        let mut rows = (size as f64).sqrt() as usize;
        while rows > 1 && size % rows != 0 {
            rows -= 1;
        }
        HexGrid::new(rows.max(1), size / rows.max(1))
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_col(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    /// Centre of neuron `i` in lattice units.
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (r, c) = self.row_col(i);
        (c as f64 + 0.5 * (r % 2) as f64, r as f64 * ROW_HEIGHT)
    }

    fn sq_distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.position(i);
        let (xj, yj) = self.position(j);
        (xi - xj).powi(2) + (yi - yj).powi(2)
    }

    /// Euclidean distance between the centres of neurons `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let m = self.len();
        if i >= m || j >= m {
            return Err(invalid(format!("neuron index out of range for {m} neurons")));
        }
        Ok(self.sq_distance(i, j).sqrt())
    }

    /// Neighbours share an edge: centre distance is 1 up to rounding.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.sq_distance(i, j).sqrt() <= 1.0 + 1e-9
    }

    /// Row-major `M x M` table of squared centre distances.
    pub fn sq_distance_table(&self) -> Vec<f64> {
        let m = self.len();
        let mut t = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                t[i * m + j] = self.sq_distance(i, j);
            }
        }
        t
    }
}

/// Gaussian neighbourhood kernel `exp(-d² / 2σ²)`.
pub fn neighborhood(d: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("neighbourhood radius must be positive, got {sigma}")));
    }
    if !(d >= 0.0) {
        return Err(invalid(format!("grid distance must be non-negative, got {d}")));
    }
    Ok(gaussian_sq(d * d, sigma))
}

#[inline]
pub(crate) fn gaussian_sq(d2: f64, sigma: f64) -> f64 {
    (-d2 / (2.0 * sigma * sigma)).exp()
}
