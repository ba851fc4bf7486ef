//! Discretization of the time axis and of the time-frequency plane.
//!
//! A [`TimeGrid`] with `n` samples and step `dx` has points
//! `t_k = (k - n/2) dx` and a dual frequency grid with step
//! `domega = 1 / (n dx)` and points `omega_l = (l - n/2) domega`.
//! Time-frequency arrays are indexed `[k, l]` over the product lattice and
//! everything is periodic with periods `n dx` and `1 / dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Snapping tolerance, in units of grid steps, for on-lattice checks.
pub const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    n: usize,
    dx: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    n: usize,
    dx: f64,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.n, raw.dx)
    }
}

impl TimeGrid {
    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "sample count must be even and >= 2, got {n}"
            )));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "time step must be positive and finite, got {dx}"
            )));
        }
        Ok(TimeGrid { n, dx })
    }

    /// Grid with `dx = domega = 1/sqrt(n)`, so time and frequency boxes coincide.
    pub fn self_dual(n: usize) -> Result<Self> {
        Self::new(n, 1.0 / (n as f64).sqrt())
    }

    /// Grid whose time box has total width `width`.
    pub fn with_width(n: usize, width: f64) -> Result<Self> {
        Self::new(n, width / n as f64)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn domega(&self) -> f64 {
        1.0 / (self.n as f64 * self.dx)
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.domega()
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dx
    }

    #[inline]
    pub fn omega(&self, l: usize) -> f64 {
        (l as f64 - (self.n / 2) as f64) * self.domega()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.t(k)).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|l| self.omega(l)).collect()
    }

    /// Half-open covered time interval `[-n dx/2, n dx/2)`.
    pub fn time_extent(&self) -> (f64, f64) {
        let h = self.n as f64 * self.dx / 2.0;
        (-h, h)
    }

    /// Half-open covered frequency interval `[-1/(2 dx), 1/(2 dx))`.
    pub fn frequency_extent(&self) -> (f64, f64) {
        let h = 0.5 / self.dx;
        (-h, h)
    }

    /// The grid of the Fourier transform: same `n`, step `domega`.
    pub fn dual(&self) -> TimeGrid {
        TimeGrid {
            n: self.n,
            dx: self.domega(),
        }
    }

    pub fn is_self_dual(&self) -> bool {
        (self.dx - self.domega()).abs() <= 1e-12 * self.dx
    }

    /// Whether two grids describe the same lattice (up to rounding in `dx`).
    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n == other.n && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }

    pub fn ensure_matches(&self, other: &TimeGrid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Integer number of steps represented by `value`, if it is a lattice multiple of `step`.
    pub fn lattice_steps(value: f64, step: f64) -> Option<i64> {
        let q = value / step;
        let r = q.round();
        if (q - r).abs() <= LATTICE_TOL && r.abs() < i64::MAX as f64 {
            Some(r as i64)
        } else {
            None
        }
    }

    /// Lattice indices `(m, r)` with `z = (m dx, r domega)`.
    pub fn shift_steps(&self, z: PhasePoint) -> Result<(i64, i64)> {
        match (
            Self::lattice_steps(z.x, self.dx),
            Self::lattice_steps(z.omega, self.domega()),
        ) {
            (Some(m), Some(r)) => Ok((m, r)),
            _ => Err(Error::OffGridShift {
                x: z.x,
                omega: z.omega,
            }),
        }
    }

    /// Nearest lattice point to `z`.
    pub fn snap(&self, z: PhasePoint) -> PhasePoint {
        PhasePoint::new(
            (z.x / self.dx).round() * self.dx,
            (z.omega / self.domega()).round() * self.domega(),
        )
    }

    /// Index of the cell holding `-z` for the cell `(k, l)`, on the periodic lattice.
    #[inline]
    pub fn mirror_index(&self, k: usize) -> usize {
        (self.n - k) % self.n
    }
}

/// A point `z = (x, omega)` of the time-frequency plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub omega: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { x: 0.0, omega: 0.0 };

    pub fn new(x: f64, omega: f64) -> Self {
        PhasePoint { x, omega }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.omega)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.omega.is_finite()
    }
}

impl std::ops::Neg for PhasePoint {
    type Output = PhasePoint;

    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.x, -self.omega)
    }
}

impl std::ops::Sub for PhasePoint {
    type Output = PhasePoint;

    fn sub(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x - rhs.x, self.omega - rhs.omega)
    }
}

impl std::ops::Add for PhasePoint {
    type Output = PhasePoint;

    fn add(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x + rhs.x, self.omega + rhs.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_degenerate() {
        assert!(TimeGrid::new(7, 0.1).is_err());
        assert!(TimeGrid::new(0, 0.1).is_err());
        assert!(TimeGrid::new(8, 0.0).is_err());
        assert!(TimeGrid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn dual_step_closes_the_lattice() {
        let g = TimeGrid::new(256, 12.0 / 256.0).unwrap();
        assert!((g.domega() * g.dx() * g.n() as f64 - 1.0).abs() < 1e-15);
        assert_eq!(g.t(128), 0.0);
        assert_eq!(g.omega(128), 0.0);
        assert!(TimeGrid::self_dual(64).unwrap().is_self_dual());
    }

    #[test]
    fn shift_steps_detect_off_grid() {
        let g = TimeGrid::self_dual(64).unwrap();
        assert_eq!(
            g.shift_steps(PhasePoint::new(3.0 * g.dx(), -2.0 * g.domega()))
                .unwrap(),
            (3, -2)
        );
        assert!(matches!(
            g.shift_steps(PhasePoint::new(0.5 * g.dx(), 0.0)),
            Err(Error::OffGridShift { .. })
        ));
    }

    #[test]
    fn sidecar_json_validates() {
        let g: TimeGrid = serde_json::from_str(r#"{"n":16,"dx":0.25}"#).unwrap();
        assert_eq!(g.n(), 16);
        assert!(serde_json::from_str::<TimeGrid>(r#"{"n":15,"dx":0.25}"#).is_err());
    }
}
