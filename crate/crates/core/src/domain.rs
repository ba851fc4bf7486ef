//! Concentration regions in the time-frequency plane and on the time axis.
//!
//! Rasterization uses cell-center membership. Balls and annuli are closed,
//! rectangles and intervals are half-open `[a, b)` so that adjacent
//! rectangles tile without overlap.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PhasePoint, TimeGrid};

/// Boundary slack, relative to the grid step, when testing whether a
/// domain fits in the covered box.
const BOX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum DomainSpec {
    Ball {
        center: PhasePoint,
        r: f64,
    },
    Rect {
        x0: f64,
        x1: f64,
        omega0: f64,
        omega1: f64,
    },
    Annulus {
        center: PhasePoint,
        r_in: f64,
        r_out: f64,
    },
    Union {
        parts: Vec<DomainSpec>,
    },
    Difference {
        base: Box<DomainSpec>,
        minus: Box<DomainSpec>,
    },
    MaskFile {
        path: PathBuf,
    },
}

/// Whether every ball around the origin meets the domain in positive measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginDensity {
    Positive,
    Zero,
    /// Raster masks cannot resolve arbitrarily small balls.
    Unknown,
}

impl DomainSpec {
    pub fn ball(center: PhasePoint, r: f64) -> Self {
        DomainSpec::Ball { center, r }
    }

    pub fn centered_ball(r: f64) -> Self {
        DomainSpec::Ball {
            center: PhasePoint::ORIGIN,
            r,
        }
    }

    pub fn rect(x0: f64, x1: f64, omega0: f64, omega1: f64) -> Self {
        DomainSpec::Rect {
            x0,
            x1,
            omega0,
            omega1,
        }
    }

    pub fn annulus(center: PhasePoint, r_in: f64, r_out: f64) -> Self {
        DomainSpec::Annulus {
            center,
            r_in,
            r_out,
        }
    }

    pub fn union(parts: Vec<DomainSpec>) -> Self {
        DomainSpec::Union { parts }
    }

    pub fn difference(base: DomainSpec, minus: DomainSpec) -> Self {
        DomainSpec::Difference {
            base: Box::new(base),
            minus: Box::new(minus),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("{what} must be finite")))
            }
        };
        match self {
            DomainSpec::Ball { center, r } => {
                finite(center.x, "center")?;
                finite(center.omega, "center")?;
                if !(*r > 0.0 && r.is_finite()) {
                    return Err(Error::InvalidDomain(format!("ball radius {r} must be positive")));
                }
            }
            DomainSpec::Rect {
                x0,
                x1,
                omega0,
                omega1,
            } => {
                for v in [x0, x1, omega0, omega1] {
                    finite(*v, "rectangle bound")?;
                }
                if !(x0 < x1 && omega0 < omega1) {
                    return Err(Error::InvalidDomain(
                        "rectangle needs x0 < x1 and omega0 < omega1".into(),
                    ));
                }
            }
            DomainSpec::Annulus {
                center,
                r_in,
                r_out,
            } => {
                finite(center.x, "center")?;
                finite(center.omega, "center")?;
                if !(*r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
                    return Err(Error::InvalidDomain(format!(
                        "annulus radii must satisfy 0 < r_in < r_out, got {r_in}, {r_out}"
                    )));
                }
            }
            DomainSpec::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidDomain("empty union".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
            DomainSpec::Difference { base, minus } => {
                base.validate()?;
                minus.validate()?;
            }
            DomainSpec::MaskFile { .. } => {}
        }
        Ok(())
    }

    /// Membership of a point; `None` for raster masks.
    pub fn contains(&self, z: PhasePoint) -> Option<bool> {
        Some(match self {
            DomainSpec::Ball { center, r } => (z - *center).norm() <= *r,
            DomainSpec::Rect {
                x0,
                x1,
                omega0,
                omega1,
            } => z.x >= *x0 && z.x < *x1 && z.omega >= *omega0 && z.omega < *omega1,
            DomainSpec::Annulus {
                center,
                r_in,
                r_out,
            } => {
                let d = (z - *center).norm();
                d >= *r_in && d <= *r_out
            }
            DomainSpec::Union { parts } => {
                let mut any = false;
                for p in parts {
                    if p.contains(z)? {
                        any = true;
                    }
                }
                any
            }
            DomainSpec::Difference { base, minus } => base.contains(z)? && !minus.contains(z)?,
            DomainSpec::MaskFile { .. } => return None,
        })
    }

    /// `(x0, x1, omega0, omega1)` enclosing the domain; `None` for raster masks.
    pub fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        match self {
            DomainSpec::Ball { center, r }
            | DomainSpec::Annulus {
                center, r_out: r, ..
            } => Some((
                center.x - r,
                center.x + r,
                center.omega - r,
                center.omega + r,
            )),
            DomainSpec::Rect {
                x0,
                x1,
                omega0,
                omega1,
            } => Some((*x0, *x1, *omega0, *omega1)),
            DomainSpec::Union { parts } => {
                let mut acc: Option<(f64, f64, f64, f64)> = None;
                for p in parts {
                    let b = p.bounding_box()?;
                    acc = Some(match acc {
                        None => b,
                        Some(a) => (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3)),
                    });
                }
                acc
            }
            DomainSpec::Difference { base, .. } => base.bounding_box(),
            DomainSpec::MaskFile { .. } => None,
        }
    }

    /// Lebesgue density of the domain at the origin, decided analytically.
    pub fn origin_density_positive(&self) -> OriginDensity {
        match self {
            DomainSpec::Ball { center, r } => bool_density(center.norm() <= *r),
            DomainSpec::Rect {
                x0,
                x1,
                omega0,
                omega1,
            } => bool_density(*x0 <= 0.0 && 0.0 <= *x1 && *omega0 <= 0.0 && 0.0 <= *omega1),
            DomainSpec::Annulus {
                center,
                r_in,
                r_out,
            } => {
                let d = center.norm();
                bool_density(*r_in <= d && d <= *r_out)
            }
            DomainSpec::Union { parts } => {
                let mut unknown = false;
                for p in parts {
                    match p.origin_density_positive() {
                        OriginDensity::Positive => return OriginDensity::Positive,
                        OriginDensity::Unknown => unknown = true,
                        OriginDensity::Zero => {}
                    }
                }
                if unknown {
                    OriginDensity::Unknown
                } else {
                    OriginDensity::Zero
                }
            }
            DomainSpec::Difference { base, minus } => match base.origin_density_positive() {
                OriginDensity::Zero => OriginDensity::Zero,
                OriginDensity::Unknown => OriginDensity::Unknown,
                OriginDensity::Positive => match minus.origin_density_positive() {
                    OriginDensity::Unknown => OriginDensity::Unknown,
                    OriginDensity::Zero => OriginDensity::Positive,
                    // Both sets touch the origin: every primitive is locally a
                    // half-plane, sector or full disc there, so sampling small
                    // circles resolves the local cone of the difference.
                    OriginDensity::Positive => bool_density(self.local_cone_nonempty()),
                },
            },
            DomainSpec::MaskFile { .. } => OriginDensity::Unknown,
        }
    }

    fn local_cone_nonempty(&self) -> bool {
        const ANGLES: usize = 7200;
        [1e-7, 1e-9].iter().all(|&rho| {
            (0..ANGLES).any(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / ANGLES as f64;
                self.contains(PhasePoint::new(rho * th.cos(), rho * th.sin()))
                    .unwrap_or(false)
            })
        })
    }
}

fn bool_density(b: bool) -> OriginDensity {
    if b {
        OriginDensity::Positive
    } else {
        OriginDensity::Zero
    }
}

pub fn origin_density_positive(spec: &DomainSpec) -> Result<OriginDensity> {
    spec.validate()?;
    match spec.origin_density_positive() {
        OriginDensity::Unknown => Err(Error::Unsupported(
            "origin density of a raster mask is resolution-limited".into(),
        )),
        d => Ok(d),
    }
}

/// Rasterized domain: boolean `n x n` array over the lattice, row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: TimeGrid,
    mask: Vec<bool>,
}

impl DomainMask {
    /// Wraps a raw mask; rejects empty masks.
    pub fn from_cells(grid: TimeGrid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.n() * grid.n() {
            return Err(Error::InvalidParameter(format!(
                "mask needs {} cells, got {}",
                grid.n() * grid.n(),
                mask.len()
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::EmptyDomain);
        }
        Ok(DomainMask { grid, mask })
    }

    /// The whole computable box.
    pub fn full(grid: TimeGrid) -> Self {
        DomainMask {
            grid,
            mask: vec![true; grid.n() * grid.n()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.grid.cell_area()
    }

    #[inline]
    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.mask[k * self.grid.n() + l]
    }

    pub fn cells(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// `|Omega| = count * dx * domega`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_area()
    }

    /// Rows `k` holding at least one cell, ascending.
    pub fn rows(&self) -> Vec<usize> {
        let n = self.grid.n();
        (0..n)
            .filter(|&k| self.mask[k * n..(k + 1) * n].iter().any(|&b| b))
            .collect()
    }

    /// `Omega ∪ (-Omega)` on the periodic lattice.
    pub fn symmetrized(&self) -> DomainMask {
        let n = self.grid.n();
        let mut out = self.mask.clone();
        for k in 0..n {
            for l in 0..n {
                if self.mask[k * n + l] {
                    out[self.grid.mirror_index(k) * n + self.grid.mirror_index(l)] = true;
                }
            }
        }
        DomainMask {
            grid: self.grid,
            mask: out,
        }
    }

    pub fn is_subset_of(&self, other: &DomainMask) -> bool {
        self.grid.matches(&other.grid)
            && self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    pub fn contains_origin(&self) -> bool {
        let h = self.grid.n() / 2;
        self.contains(h, h)
    }
}

/// Rasterizes an analytic domain by cell-center membership.
pub fn rasterize(spec: &DomainSpec, grid: &TimeGrid) -> Result<DomainMask> {
    spec.validate()?;
    if let DomainSpec::MaskFile { path } = spec {
        let (file_grid, mask) = crate::io::read_mask(path)?;
        grid.ensure_matches(&file_grid)?;
        return DomainMask::from_cells(*grid, mask);
    }
    if let Some((bx0, bx1, bw0, bw1)) = spec.bounding_box() {
        let (tx0, tx1) = grid.time_extent();
        let (fw0, fw1) = grid.frequency_extent();
        let sx = BOX_SLACK * grid.dx();
        let sw = BOX_SLACK * grid.domega();
        if bx0 < tx0 - sx || bx1 > tx1 + sx || bw0 < fw0 - sw || bw1 > fw1 + sw {
            return Err(Error::DomainOutsideGrid(format!(
                "[{bx0}, {bx1}] x [{bw0}, {bw1}] not inside [{tx0}, {tx1}) x [{fw0}, {fw1})"
            )));
        }
    }
    let n = grid.n();
    let mut mask = Vec::with_capacity(n * n);
    for k in 0..n {
        let x = grid.t(k);
        for l in 0..n {
            let z = PhasePoint::new(x, grid.omega(l));
            mask.push(spec.contains(z).unwrap_or(false));
        }
    }
    DomainMask::from_cells(*grid, mask)
}

pub fn measure(mask: &DomainMask) -> f64 {
    mask.measure()
}

/// Subset of the time axis, for correlation objectives that only see time lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum TimeSet {
    /// Half-open `[a, b)`.
    Interval { a: f64, b: f64 },
    Union { parts: Vec<TimeSet> },
}

impl TimeSet {
    pub fn interval(a: f64, b: f64) -> Self {
        TimeSet::Interval { a, b }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TimeSet::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::InvalidDomain(format!("interval [{a}, {b}) is empty")));
                }
            }
            TimeSet::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidDomain("empty union".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        match self {
            TimeSet::Interval { a, b } => t >= *a && t < *b,
            TimeSet::Union { parts } => parts.iter().any(|p| p.contains(t)),
        }
    }

    /// Disjoint sorted intervals covering the set.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut raw = Vec::new();
        self.collect(&mut raw);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        merged
    }

    fn collect(&self, out: &mut Vec<(f64, f64)>) {
        match self {
            TimeSet::Interval { a, b } => out.push((*a, *b)),
            TimeSet::Union { parts } => parts.iter().for_each(|p| p.collect(out)),
        }
    }

    /// Exact Lebesgue measure.
    pub fn length(&self) -> f64 {
        self.intervals().iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMask {
    grid: TimeGrid,
    mask: Vec<bool>,
}

impl TimeMask {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| self.mask[k]).collect()
    }

    pub fn measure(&self) -> f64 {
        self.mask.iter().filter(|&&b| b).count() as f64 * self.grid.dx()
    }
}

pub fn rasterize_time(set: &TimeSet, grid: &TimeGrid) -> Result<TimeMask> {
    set.validate()?;
    let (lo, hi) = grid.time_extent();
    for (a, b) in set.intervals() {
        let s = BOX_SLACK * grid.dx();
        if a < lo - s || b > hi + s {
            return Err(Error::DomainOutsideGrid(format!(
                "[{a}, {b}) not inside [{lo}, {hi})"
            )));
        }
    }
    let mask: Vec<bool> = (0..grid.n()).map(|k| set.contains(grid.t(k))).collect();
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyDomain);
    }
    Ok(TimeMask { grid: *grid, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box12() -> TimeGrid {
        TimeGrid::new(256, 12.0 / 256.0).unwrap()
    }

    #[test]
    fn tiny_ball_between_cell_centers_is_empty() {
        let g = TimeGrid::new(16, 1.0).unwrap();
        let spec = DomainSpec::ball(PhasePoint::new(0.5, 0.5 * g.domega()), 0.4);
        assert!(matches!(rasterize(&spec, &g), Err(Error::EmptyDomain)));
    }

    #[test]
    fn unit_square_measure() {
        // edges on the lattice: exactly 8 x 8 cells of area 1/64
        let g = TimeGrid::self_dual(64).unwrap();
        let m = rasterize(&DomainSpec::rect(0.0, 1.0, 0.0, 1.0), &g).unwrap();
        assert_eq!(m.count(), 64);
        assert!((m.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_measure_close_to_area() {
        let m = rasterize(&DomainSpec::centered_ball(2.0), &box12()).unwrap();
        let area = std::f64::consts::PI * 4.0;
        assert!((m.measure() - area).abs() / area < 0.02);
    }

    #[test]
    fn full_box_measure() {
        let g = box12();
        let full = DomainMask::full(g);
        let box_area = (g.n() as f64 * g.dx()) * (1.0 / g.dx());
        assert!((full.measure() - box_area).abs() < 1e-9 * box_area);
    }

    #[test]
    fn disjoint_union_is_additive() {
        let g = box12();
        let a = DomainSpec::ball(PhasePoint::new(-2.0, 0.0), 1.0);
        let b = DomainSpec::ball(PhasePoint::new(2.5, 1.0), 1.2);
        let ma = rasterize(&a, &g).unwrap().measure();
        let mb = rasterize(&b, &g).unwrap().measure();
        let mu = rasterize(&DomainSpec::union(vec![a, b]), &g).unwrap().measure();
        assert!((mu - ma - mb).abs() <= 2.0 * g.cell_area());
    }

    #[test]
    fn self_difference_is_empty() {
        let s = DomainSpec::centered_ball(1.0);
        let d = DomainSpec::difference(s.clone(), s);
        assert!(matches!(rasterize(&d, &box12()), Err(Error::EmptyDomain)));
    }

    #[test]
    fn outside_box_rejected() {
        let g = box12();
        let spec = DomainSpec::ball(PhasePoint::new(5.5, 0.0), 1.0);
        assert!(matches!(rasterize(&spec, &g), Err(Error::DomainOutsideGrid(_))));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(DomainSpec::centered_ball(-1.0).validate().is_err());
        assert!(DomainSpec::annulus(PhasePoint::ORIGIN, 2.0, 1.0).validate().is_err());
        assert!(DomainSpec::rect(1.0, 0.0, 0.0, 1.0).validate().is_err());
    }

    #[test]
    fn nested_balls_are_monotone() {
        let g = box12();
        let small = rasterize(&DomainSpec::centered_ball(1.0), &g).unwrap();
        let big = rasterize(&DomainSpec::centered_ball(2.0), &g).unwrap();
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
    }

    #[test]
    fn origin_density_cases() {
        use OriginDensity::*;
        assert_eq!(DomainSpec::centered_ball(1.0).origin_density_positive(), Positive);
        assert_eq!(
            DomainSpec::annulus(PhasePoint::ORIGIN, 1.0, 2.0).origin_density_positive(),
            Zero
        );
        assert_eq!(DomainSpec::rect(0.5, 1.0, 0.5, 1.0).origin_density_positive(), Zero);
        assert_eq!(DomainSpec::rect(0.0, 1.0, 0.0, 1.0).origin_density_positive(), Positive);
        // ball touching the origin from the side
        assert_eq!(
            DomainSpec::ball(PhasePoint::new(1.0, 0.0), 1.0).origin_density_positive(),
            Positive
        );
        // removing the right half plane near the origin leaves the left half
        let half = DomainSpec::difference(
            DomainSpec::centered_ball(1.0),
            DomainSpec::rect(0.0, 2.0, -2.0, 2.0),
        );
        assert_eq!(half.origin_density_positive(), Positive);
        let gone = DomainSpec::difference(
            DomainSpec::centered_ball(1.0),
            DomainSpec::centered_ball(0.5),
        );
        assert_eq!(gone.origin_density_positive(), Zero);
        let mask = DomainSpec::MaskFile {
            path: "x.csv".into(),
        };
        assert!(matches!(origin_density_positive(&mask), Err(Error::Unsupported(_))));
    }

    #[test]
    fn spec_json_is_tagged() {
        let s = DomainSpec::annulus(PhasePoint::ORIGIN, 1.0, 2.0);
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains(r#""variant":"Annulus""#));
        assert_eq!(serde_json::from_str::<DomainSpec>(&js).unwrap(), s);
    }

    #[test]
    fn time_mask_measure() {
        let g = TimeGrid::new(256, 1.0 / 8.0).unwrap();
        let m = rasterize_time(&TimeSet::interval(0.0, 1.0), &g).unwrap();
        assert!((m.measure() - 1.0).abs() < 1e-12);
        assert!(TimeSet::Union { parts: vec![] }.validate().is_err());
    }
}
