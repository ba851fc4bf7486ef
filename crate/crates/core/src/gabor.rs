//! Truncated Gabor systems `{pi(m a, k b) g : |m|, |k| <= R}` on the lattice grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::par::Execution;
use crate::signal::Signal;
use crate::transform::StftKernel;

/// Largest fraction of the STFT mass a truncated lattice may miss.
pub const MAX_LEAKAGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborLattice {
    /// Time step, a multiple of `dx`.
    pub a: f64,
    /// Frequency step, a multiple of `domega`.
    pub b: f64,
    /// Truncation radius in lattice units; `None` takes the largest that fits the grid.
    #[serde(default)]
    pub radius: Option<usize>,
}

impl GaborLattice {
    pub fn new(a: f64, b: f64, radius: Option<usize>) -> Self {
        GaborLattice { a, b, radius }
    }

    /// `a = b = 1/sqrt(2)`, each rounded to the nearest grid multiple, maximal radius.
    pub fn default_for(grid: &TimeGrid) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = ((s / grid.dx()).round().max(1.0)) * grid.dx();
        let b = ((s / grid.domega()).round().max(1.0)) * grid.domega();
        GaborLattice { a, b, radius: None }
    }

    pub fn density(&self) -> f64 {
        self.a * self.b
    }

    pub fn resolve(&self, grid: &TimeGrid) -> Result<ResolvedLattice> {
        let steps = |v: f64, step: f64| -> Result<usize> {
            match TimeGrid::lattice_steps(v, step) {
                Some(s) if s >= 1 => Ok(s as usize),
                _ => Err(Error::LatticeIncommensurate {
                    step: v,
                    grid_step: step,
                }),
            }
        };
        let alpha = steps(self.a, grid.dx())?;
        let beta = steps(self.b, grid.domega())?;
        let half = grid.n() / 2;
        let max_radius = ((half - 1) / alpha).min((half - 1) / beta);
        if max_radius == 0 {
            return Err(Error::InvalidParameter(
                "lattice step exceeds half the grid".into(),
            ));
        }
        let radius = match self.radius {
            None => max_radius,
            Some(0) => return Err(Error::InvalidParameter("truncation radius must be positive".into())),
            Some(r) if r > max_radius => {
                return Err(Error::InvalidParameter(format!(
                    "truncation radius {r} exceeds the grid (max {max_radius})"
                )))
            }
            Some(r) => r,
        };
        let idx = |step: usize| -> Vec<usize> {
            (-(radius as i64)..=radius as i64)
                .map(|m| (half as i64 + m * step as i64) as usize)
                .collect()
        };
        Ok(ResolvedLattice {
            grid: *grid,
            alpha,
            beta,
            radius,
            rows: idx(alpha),
            cols: idx(beta),
        })
    }
}

/// A lattice bound to a grid: its points are the cells `(rows[i], cols[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLattice {
    pub grid: TimeGrid,
    pub alpha: usize,
    pub beta: usize,
    pub radius: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl ResolvedLattice {
    pub fn len(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid cells inside the box covered by the truncated lattice (half a step of margin).
    fn covered_rows(&self) -> std::ops::Range<usize> {
        let half = self.grid.n() / 2;
        let reach = self.radius * self.alpha + self.alpha / 2;
        half.saturating_sub(reach)..(half + reach + 1).min(self.grid.n())
    }

    fn covered_cols(&self) -> std::ops::Range<usize> {
        let half = self.grid.n() / 2;
        let reach = self.radius * self.beta + self.beta / 2;
        half.saturating_sub(reach)..(half + reach + 1).min(self.grid.n())
    }
}

/// Coefficients `<f, pi(lambda) g>`, row-major over (time index, frequency index).
pub(crate) fn coefficients_with(
    kernel: &StftKernel,
    f: &Signal,
    g: &Signal,
    lat: &ResolvedLattice,
    exec: Execution,
) -> Vec<Complex64> {
    let rows = kernel.rows(f.samples(), g.samples(), &lat.rows, exec);
    let mut out = Vec::with_capacity(lat.len());
    for row in &rows {
        for &l in &lat.cols {
            out.push(row[l]);
        }
    }
    out
}

pub fn gabor_coefficients(f: &Signal, g: &Signal, lat: &GaborLattice) -> Result<Vec<Complex64>> {
    f.grid().ensure_matches(g.grid())?;
    if g.norm_sq() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let resolved = lat.resolve(f.grid())?;
    let kernel = StftKernel::new(*f.grid());
    Ok(coefficients_with(&kernel, f, g, &resolved, Execution::default()))
}

/// Fraction of `||V_g f||^2 = ||f||^2 ||g||^2` lying outside the lattice box.
pub(crate) fn leakage_with(
    kernel: &StftKernel,
    f: &Signal,
    g: &Signal,
    lat: &ResolvedLattice,
    exec: Execution,
) -> f64 {
    let total = f.norm_sq() * g.norm_sq();
    if total == 0.0 {
        return 0.0;
    }
    let rows: Vec<usize> = lat.covered_rows().collect();
    let cols = lat.covered_cols();
    let data = kernel.rows(f.samples(), g.samples(), &rows, exec);
    let mut inside = 0.0;
    for row in &data {
        for v in &row[cols.clone()] {
            inside += v.norm_sqr();
        }
    }
    inside *= lat.grid.cell_area();
    (1.0 - inside / total).max(0.0)
}

pub fn truncation_leakage(f: &Signal, g: &Signal, lat: &GaborLattice) -> Result<f64> {
    f.grid().ensure_matches(g.grid())?;
    let resolved = lat.resolve(f.grid())?;
    let kernel = StftKernel::new(*f.grid());
    Ok(leakage_with(&kernel, f, g, &resolved, Execution::default()))
}

/// `(sum_lambda |c_lambda|^q)^{1/q}` (max for `q = inf`); power sums are
/// accumulated first and exponentiated once, so quasi-norms `q < 1` are fine.
pub fn q_sum(coeffs: &[Complex64], q: f64) -> f64 {
    if q.is_infinite() {
        coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    } else {
        coeffs.iter().map(|c| c.norm().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Discrete modulation-space (quasi-)norm over a truncated Gabor lattice.
pub fn gabor_norm(f: &Signal, g: &Signal, lat: &GaborLattice, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    f.grid().ensure_matches(g.grid())?;
    if g.norm_sq() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let resolved = lat.resolve(f.grid())?;
    let kernel = StftKernel::new(*f.grid());
    let exec = Execution::default();
    let leak = leakage_with(&kernel, f, g, &resolved, exec);
    if leak > MAX_LEAKAGE {
        return Err(Error::TruncationLeakage { leakage: leak });
    }
    Ok(q_sum(&coefficients_with(&kernel, f, g, &resolved, exec), q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian;

    #[test]
    fn default_lattice_is_commensurate_and_dense() {
        let grid = TimeGrid::self_dual(256).unwrap();
        let lat = GaborLattice::default_for(&grid);
        let r = lat.resolve(&grid).unwrap();
        assert_eq!(r.alpha, 11);
        assert!(lat.density() < 1.0);
        assert_eq!(r.rows.len(), 2 * r.radius + 1);
        assert_eq!(*r.rows.last().unwrap(), 128 + r.radius * 11);
    }

    #[test]
    fn incommensurate_steps_rejected() {
        let grid = TimeGrid::self_dual(64).unwrap();
        let lat = GaborLattice::new(0.3, 0.25, None);
        assert!(matches!(
            lat.resolve(&grid),
            Err(Error::LatticeIncommensurate { .. })
        ));
    }

    #[test]
    fn window_self_coefficient_is_peak() {
        let grid = TimeGrid::self_dual(256).unwrap();
        let g = gaussian(grid, 1.0);
        let lat = GaborLattice::default_for(&grid);
        let v = gabor_norm(&g, &g, &lat, f64::INFINITY).unwrap();
        assert!((v - g.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn leakage_detected_for_spread_signals() {
        let grid = TimeGrid::self_dual(64).unwrap();
        let g = gaussian(grid, 1.0);
        let lat = GaborLattice::new(grid.dx() * 4.0, grid.domega() * 4.0, Some(1));
        let wide = gaussian(grid, 3.0);
        assert!(matches!(
            gabor_norm(&wide, &g, &lat, 2.0),
            Err(Error::TruncationLeakage { .. })
        ));
    }
}
