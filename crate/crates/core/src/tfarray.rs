use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{PhasePoint, TimeGrid};

/// Complex `n x n` array over the time-frequency lattice of a grid; entry
/// `[k, l]` sits at `(x_k, omega_l)`, stored row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfArray {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl TfArray {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() * grid.n() {
            return Err(crate::Error::InvalidParameter(format!(
                "expected {} entries, got {}",
                grid.n() * grid.n(),
                values.len()
            )));
        }
        Ok(TfArray { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        TfArray {
            grid,
            values: vec![Complex64::default(); grid.n() * grid.n()],
        }
    }

    /// Assembles the array from full rows, in row order.
    pub(crate) fn from_rows(grid: TimeGrid, rows: Vec<Vec<Complex64>>) -> Self {
        let mut values = Vec::with_capacity(grid.n() * grid.n());
        for row in rows {
            values.extend(row);
        }
        TfArray { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.grid.n() + l]
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.grid.n();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn point(&self, k: usize, l: usize) -> PhasePoint {
        PhasePoint::new(self.grid.t(k), self.grid.omega(l))
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.grid.cell_area()
    }

    pub fn origin_index(&self) -> (usize, usize) {
        (self.grid.n() / 2, self.grid.n() / 2)
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Index of the largest magnitude; the first one wins ties.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let n = self.grid.n();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, v) in self.values.iter().enumerate() {
            let a = v.norm();
            if a > best.1 {
                best = (i, a);
            }
        }
        (best.0 / n, best.0 % n)
    }

    /// `(sum |F|^2 dx domega)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()).sqrt()
    }

    /// Fraction of the squared mass in the outer 10% frame of the array.
    pub fn edge_mass_ratio(&self) -> f64 {
        let n = self.grid.n();
        let frame = (n / 10).max(1);
        let edge = |i: usize| i < frame || i >= n - frame;
        let mut total = 0.0;
        let mut outer = 0.0;
        for k in 0..n {
            for l in 0..n {
                let m = self.values[k * n + l].norm_sqr();
                total += m;
                if edge(k) || edge(l) {
                    outer += m;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    /// Largest magnitude on the outer 10% frame.
    pub fn edge_max_abs(&self) -> f64 {
        let n = self.grid.n();
        let frame = (n / 10).max(1);
        let edge = |i: usize| i < frame || i >= n - frame;
        let mut m = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                if edge(k) || edge(l) {
                    m = m.max(self.values[k * n + l].norm());
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &TfArray) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entrywise deviation of magnitudes.
    pub fn max_magnitude_diff(&self, other: &TfArray) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max))
    }
}
