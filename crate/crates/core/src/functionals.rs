//! Concentration functionals and their gradients.
//!
//! Gradients are real gradients with respect to the grid inner product:
//! for a perturbation `v`, `d/dh J(f + h v) = Re <v, grad J(f)>`.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{rasterize, rasterize_time, DomainMask, DomainSpec, TimeMask, TimeSet};
use crate::error::{Error, Result};
use crate::gabor::{self, GaborLattice, ResolvedLattice};
use crate::grid::TimeGrid;
use crate::par::Execution;
use crate::signal::{gaussian, Signal};
use crate::tfarray::TfArray;
use crate::transform::{fourier, inverse_fourier, StftKernel};

/// `epsilon` in `|G|_eps = (|G|^2 + eps^2)^{1/2}`, used in gradients for exponents below 2.
pub const GRADIENT_SMOOTHING: f64 = 1e-9;

#[inline]
fn abs_pow(z: Complex64, p: f64) -> f64 {
    if p == 2.0 {
        z.norm_sqr()
    } else {
        z.norm().powf(p)
    }
}

/// `|z|^{p-2}`, smoothed when `p < 2`.
#[inline]
fn grad_weight(z: Complex64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p < 2.0 {
        (z.norm_sqr() + GRADIENT_SMOOTHING * GRADIENT_SMOOTHING).powf((p - 2.0) / 2.0)
    } else {
        z.norm().powf(p - 2.0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be finite and >= 1, got {p}")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("q must lie in (0, 2), got {q}")))
    }
}

fn nonzero_norm_sq(f: &Signal) -> Result<f64> {
    let n = f.norm_sq();
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::ZeroSignal)
    }
}

/// `(sum_{mask} |F|^p dx domega)^{1/p}`, row-major summation; `p = inf` gives the max.
pub fn lp_on_domain(f: &TfArray, mask: &DomainMask, p: f64) -> Result<f64> {
    f.grid().ensure_matches(mask.grid())?;
    if p.is_infinite() {
        return Ok(f
            .values()
            .iter()
            .zip(mask.cells())
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max));
    }
    check_p(p)?;
    let s: f64 = f
        .values()
        .iter()
        .zip(mask.cells())
        .filter(|(_, &m)| m)
        .map(|(v, _)| abs_pow(*v, p))
        .sum();
    Ok((s * mask.cell_area()).powf(1.0 / p))
}

/// Rows of `mask` and of its mirror image, ascending.
#[derive(Debug, Clone)]
struct RowSet {
    rows: Vec<usize>,
}

impl RowSet {
    fn new(n: usize, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut present = vec![false; n];
        for k in rows {
            present[k] = true;
        }
        RowSet {
            rows: (0..n).filter(|&k| present[k]).collect(),
        }
    }

    fn symmetric(mask: &DomainMask) -> Self {
        let grid = mask.grid();
        let rows = mask.rows();
        let mirrored: Vec<usize> = rows.iter().map(|&k| grid.mirror_index(k)).collect();
        RowSet::new(grid.n(), rows.into_iter().chain(mirrored))
    }
}

/// `Phi = sum_{Omega} |V_f f|^p w` and optionally its gradient
/// `V_f^*(p |G|^{p-2} G (chi_Omega(z) + chi_Omega(-z)))`.
fn ambiguity_power(
    kernel: &StftKernel,
    f: &Signal,
    mask: &DomainMask,
    rows: &RowSet,
    p: f64,
    exec: Execution,
    with_grad: bool,
) -> (f64, Option<Vec<Complex64>>) {
    let grid = mask.grid();
    let n = grid.n();
    let data = kernel.rows(f.samples(), f.samples(), &rows.rows, exec);
    let mut s = 0.0;
    for (i, &k) in rows.rows.iter().enumerate() {
        for l in 0..n {
            if mask.contains(k, l) {
                s += abs_pow(data[i][l], p);
            }
        }
    }
    let phi = s * grid.cell_area();
    if !with_grad {
        return (phi, None);
    }
    let coeffs: Vec<Vec<Complex64>> = exec.map(rows.rows.len(), |i| {
        let k = rows.rows[i];
        let mk = grid.mirror_index(k);
        (0..n)
            .map(|l| {
                let ml = grid.mirror_index(l);
                let chi = mask.contains(k, l) as u8 + mask.contains(mk, ml) as u8;
                if chi == 0 {
                    Complex64::default()
                } else {
                    let g = data[i][l];
                    g * (p * grad_weight(g, p) * chi as f64)
                }
            })
            .collect()
    });
    let grad = kernel.adjoint(f.samples(), &rows.rows, &coeffs, exec);
    (phi, Some(grad))
}

/// `Phi = sum_{Omega} |V_g f|^p w` and optionally `V_g^*(p |V|^{p-2} V chi_Omega)`.
#[allow(clippy::too_many_arguments)]
fn window_power(
    kernel: &StftKernel,
    f: &Signal,
    g: &Signal,
    mask: Option<&DomainMask>,
    rows: &[usize],
    p: f64,
    exec: Execution,
    with_grad: bool,
) -> (f64, Option<Vec<Complex64>>) {
    let grid = *f.grid();
    let n = grid.n();
    let inside = |k: usize, l: usize| mask.map_or(true, |m| m.contains(k, l));
    let data = kernel.rows(f.samples(), g.samples(), rows, exec);
    let mut s = 0.0;
    for (i, &k) in rows.iter().enumerate() {
        for l in 0..n {
            if inside(k, l) {
                s += abs_pow(data[i][l], p);
            }
        }
    }
    let phi = s * grid.cell_area();
    if !with_grad {
        return (phi, None);
    }
    let coeffs: Vec<Vec<Complex64>> = exec.map(rows.len(), |i| {
        let k = rows[i];
        (0..n)
            .map(|l| {
                if inside(k, l) {
                    let v = data[i][l];
                    v * (p * grad_weight(v, p))
                } else {
                    Complex64::default()
                }
            })
            .collect()
    });
    (phi, Some(kernel.adjoint(g.samples(), rows, &coeffs, exec)))
}

/// Unnormalized `||A(f)||_{L^p(Omega)}`; zero for the zero signal.
pub fn ambiguity_lp_norm(f: &Signal, mask: &DomainMask, p: f64) -> Result<f64> {
    check_p(p)?;
    f.grid().ensure_matches(mask.grid())?;
    let kernel = StftKernel::new(*f.grid());
    let rows = RowSet::new(f.grid().n(), mask.rows());
    let (phi, _) = ambiguity_power(&kernel, f, mask, &rows, p, Execution::default(), false);
    Ok(phi.powf(1.0 / p))
}

/// `||A(f)||_{L^p(Omega)} / ||f||^2`.
pub fn objective_ambiguity(f: &Signal, mask: &DomainMask, p: f64) -> Result<f64> {
    Objective::ambiguity(mask.clone(), p)?.value(f)
}

/// Gradient of [`objective_ambiguity`].
pub fn gradient_ambiguity(f: &Signal, mask: &DomainMask, p: f64) -> Result<Signal> {
    Ok(Objective::ambiguity(mask.clone(), p)?.value_and_gradient(f)?.1)
}

/// `max_{Omega} |A(f)| / |A(f)(0, 0)|`.
pub fn objective_linf(f: &Signal, mask: &DomainMask) -> Result<f64> {
    Objective::linf(mask.clone())?.value(f)
}

/// `(sum_{x in Omega_1} |<f, T_x f>|^p dx)^{1/p} / ||f||^2`.
pub fn objective_timecorr(f: &Signal, support: &TimeMask, p: f64) -> Result<f64> {
    Objective::timecorr(support.clone(), p)?.value(f)
}

/// `||V_g f||_{L^p(Omega)} / ||f||`.
pub fn objective_fixed_window(f: &Signal, g: &Signal, mask: &DomainMask, p: f64) -> Result<f64> {
    Objective::fixed_window(g.clone(), mask.clone(), p)?.value(f)
}

/// `||V_g f||_{L^q}` over the whole grid (max for `q = inf`).
pub fn mq_norm_continuous(f: &Signal, g: &Signal, q: f64) -> Result<f64> {
    f.grid().ensure_matches(g.grid())?;
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    if g.norm_sq() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let grid = *f.grid();
    let kernel = StftKernel::new(grid);
    let rows: Vec<usize> = (0..grid.n()).collect();
    let data = kernel.rows(f.samples(), g.samples(), &rows, Execution::default());
    if q.is_infinite() {
        return Ok(data
            .iter()
            .flat_map(|r| r.iter().map(|v| v.norm()))
            .fold(0.0, f64::max));
    }
    let s: f64 = data.iter().flat_map(|r| r.iter().map(|v| abs_pow(*v, q))).sum();
    Ok((s * grid.cell_area()).powf(1.0 / q))
}

/// `||A(f)||_{L^p(Omega)} / ||f||_{M^q}^2`.
pub fn objective_mq(f: &Signal, mask: &DomainMask, p: f64, q: f64, g: &Signal, norm: &MqNorm) -> Result<f64> {
    if let MqNorm::Gabor(lat) = norm {
        // enforce the truncation diagnostic for this evaluation
        gabor::gabor_norm(f, g, lat, q)?;
    }
    Objective::mq(mask.clone(), p, q, g.clone(), norm.clone())?.value(f)
}

/// Largest windowed L² mass of `F` over discs of radius `r`:
/// `max_y (sum_{|z - y| <= r} |F(z)|^2 dx domega)^{1/2}`, without wrap-around.
pub fn amalgam_norm(f: &TfArray, r: f64) -> Result<f64> {
    let grid = *f.grid();
    let (dx, dw) = (grid.dx(), grid.domega());
    if !(r >= dx.max(dw)) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "window radius {r} is below the grid cell"
        )));
    }
    let n = grid.n();
    // per-row prefix sums of |F|^2
    let prefix: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut acc = Vec::with_capacity(n + 1);
            acc.push(0.0);
            let mut s = 0.0;
            for v in f.row(k) {
                s += v.norm_sqr();
                acc.push(s);
            }
            acc
        })
        .collect();
    let reach = (r / dx + 1e-9).floor() as i64;
    let spans: Vec<(i64, i64)> = (-reach..=reach)
        .map(|di| {
            let h = ((r * r - (di as f64 * dx).powi(2)).max(0.0)).sqrt();
            (di, (h / dw + 1e-9).floor() as i64)
        })
        .collect();
    let best_rows = Execution::default().map(n, |k| {
        let mut best = 0.0f64;
        for l in 0..n as i64 {
            let mut s = 0.0;
            for &(di, half) in &spans {
                let kk = k as i64 + di;
                if kk < 0 || kk >= n as i64 {
                    continue;
                }
                let lo = (l - half).max(0) as usize;
                let hi = ((l + half + 1).min(n as i64)) as usize;
                let row = &prefix[kk as usize];
                s += row[hi] - row[lo];
            }
            best = best.max(s);
        }
        best
    });
    let best = best_rows.into_iter().fold(0.0, f64::max);
    Ok((best * grid.cell_area()).sqrt())
}

/// Window of fixed-window and modulation-space objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum WindowSpec {
    Gaussian { lambda: f64 },
    File { path: PathBuf },
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::Gaussian { lambda: 1.0 }
    }
}

impl WindowSpec {
    pub fn resolve(&self, grid: &TimeGrid) -> Result<Signal> {
        let g = match self {
            WindowSpec::Gaussian { lambda } => {
                if !(*lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::InvalidDilation(*lambda));
                }
                gaussian(*grid, *lambda)
            }
            WindowSpec::File { path } => {
                let g = crate::io::read_signal(path)?;
                grid.ensure_matches(g.grid())?;
                g
            }
        };
        if g.norm_sq() == 0.0 {
            return Err(Error::ZeroWindow);
        }
        Ok(g)
    }
}

/// Flavor of the modulation-space normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MqFlavor {
    Continuous,
    Gabor {
        a: f64,
        b: f64,
        #[serde(default)]
        radius: Option<usize>,
    },
}

/// Resolved normalization used by [`objective_mq`].
#[derive(Debug, Clone, PartialEq)]
pub enum MqNorm {
    Continuous,
    Gabor(GaborLattice),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ObjectiveKind {
    AmbiguityLp {
        p: f64,
    },
    AmbiguityLinf,
    TimeCorrelationLp {
        p: f64,
        support: TimeSet,
    },
    FixedWindowLp {
        p: f64,
        #[serde(default)]
        window: WindowSpec,
    },
    MqNormalizedLp {
        p: f64,
        q: f64,
        #[serde(default)]
        window: WindowSpec,
        norm: MqFlavor,
    },
}

/// Serializable description of an objective; `domain` is required for every
/// kind except the time-correlation one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(flatten)]
    pub kind: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

impl ObjectiveSpec {
    pub fn ambiguity_lp(p: f64, domain: DomainSpec) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::AmbiguityLp { p },
            domain: Some(domain),
        }
    }

    pub fn compile(&self, grid: &TimeGrid) -> Result<Objective> {
        Objective::compile(self, grid)
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Ambiguity {
        p: f64,
        mask: DomainMask,
        rows: RowSet,
    },
    Linf {
        mask: DomainMask,
        rows: Vec<usize>,
    },
    TimeCorr {
        p: f64,
        support: TimeMask,
    },
    FixedWindow {
        p: f64,
        g: Signal,
        mask: DomainMask,
        rows: Vec<usize>,
    },
    Mq {
        p: f64,
        q: f64,
        g: Signal,
        mask: DomainMask,
        rows: RowSet,
        lattice: Option<ResolvedLattice>,
    },
}

/// An objective bound to a grid, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Objective {
    grid: TimeGrid,
    kernel: StftKernel,
    exec: Execution,
    inner: Compiled,
}

impl Objective {
    fn build(grid: TimeGrid, inner: Compiled) -> Self {
        Objective {
            grid,
            kernel: StftKernel::new(grid),
            exec: Execution::default(),
            inner,
        }
    }

    pub fn ambiguity(mask: DomainMask, p: f64) -> Result<Self> {
        check_p(p)?;
        let rows = RowSet::symmetric(&mask);
        Ok(Self::build(*mask.grid(), Compiled::Ambiguity { p, mask, rows }))
    }

    pub fn linf(mask: DomainMask) -> Result<Self> {
        let grid = *mask.grid();
        let mut rows = mask.rows();
        rows.push(grid.n() / 2);
        let rows = RowSet::new(grid.n(), rows).rows;
        Ok(Self::build(grid, Compiled::Linf { mask, rows }))
    }

    pub fn timecorr(support: TimeMask, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self::build(*support.grid(), Compiled::TimeCorr { p, support }))
    }

    pub fn fixed_window(g: Signal, mask: DomainMask, p: f64) -> Result<Self> {
        check_p(p)?;
        g.grid().ensure_matches(mask.grid())?;
        if g.norm_sq() == 0.0 {
            return Err(Error::ZeroWindow);
        }
        let rows = mask.rows();
        Ok(Self::build(*mask.grid(), Compiled::FixedWindow { p, g, mask, rows }))
    }

    pub fn mq(mask: DomainMask, p: f64, q: f64, g: Signal, norm: MqNorm) -> Result<Self> {
        check_p(p)?;
        check_q(q)?;
        let grid = *mask.grid();
        grid.ensure_matches(g.grid())?;
        if g.norm_sq() == 0.0 {
            return Err(Error::ZeroWindow);
        }
        let lattice = match norm {
            MqNorm::Continuous => None,
            MqNorm::Gabor(lat) => {
                if !(lat.density() < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lattice density a*b = {} must be below 1",
                        lat.density()
                    )));
                }
                Some(lat.resolve(&grid)?)
            }
        };
        let rows = RowSet::symmetric(&mask);
        Ok(Self::build(
            grid,
            Compiled::Mq {
                p,
                q,
                g,
                mask,
                rows,
                lattice,
            },
        ))
    }

    pub fn compile(spec: &ObjectiveSpec, grid: &TimeGrid) -> Result<Self> {
        let mask = || -> Result<DomainMask> {
            let d = spec
                .domain
                .as_ref()
                .ok_or_else(|| Error::Schema("objective needs a domain".into()))?;
            rasterize(d, grid)
        };
        match &spec.kind {
            ObjectiveKind::AmbiguityLp { p } => Self::ambiguity(mask()?, *p),
            ObjectiveKind::AmbiguityLinf => Self::linf(mask()?),
            ObjectiveKind::TimeCorrelationLp { p, support } => {
                Self::timecorr(rasterize_time(support, grid)?, *p)
            }
            ObjectiveKind::FixedWindowLp { p, window } => {
                Self::fixed_window(window.resolve(grid)?, mask()?, *p)
            }
            ObjectiveKind::MqNormalizedLp { p, q, window, norm } => {
                let norm = match norm {
                    MqFlavor::Continuous => MqNorm::Continuous,
                    MqFlavor::Gabor { a, b, radius } => MqNorm::Gabor(GaborLattice::new(*a, *b, *radius)),
                };
                Self::mq(mask()?, *p, *q, window.resolve(grid)?, norm)
            }
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The rasterized 2-D domain, if the objective has one.
    pub fn mask(&self) -> Option<&DomainMask> {
        match &self.inner {
            Compiled::Ambiguity { mask, .. }
            | Compiled::Linf { mask, .. }
            | Compiled::FixedWindow { mask, .. }
            | Compiled::Mq { mask, .. } => Some(mask),
            Compiled::TimeCorr { .. } => None,
        }
    }

    /// Universal upper bound on the objective, where one is known.
    pub fn upper_bound(&self) -> Option<f64> {
        match &self.inner {
            Compiled::Ambiguity { p, mask, .. } => Some(mask.measure().powf(1.0 / p)),
            Compiled::Linf { .. } => Some(1.0),
            Compiled::TimeCorr { p, support } => Some(support.measure().powf(1.0 / p)),
            Compiled::FixedWindow { .. } | Compiled::Mq { .. } => None,
        }
    }

    /// Whether every on-grid time-frequency shift leaves the value unchanged.
    pub fn is_shift_invariant(&self) -> bool {
        match &self.inner {
            Compiled::Ambiguity { .. } | Compiled::Linf { .. } | Compiled::TimeCorr { .. } => true,
            Compiled::Mq { lattice, .. } => lattice.is_none(),
            Compiled::FixedWindow { .. } => false,
        }
    }

    pub fn has_gradient(&self) -> bool {
        !matches!(self.inner, Compiled::Linf { .. } | Compiled::TimeCorr { .. })
    }

    pub fn value(&self, f: &Signal) -> Result<f64> {
        Ok(self.eval(f, false)?.0)
    }

    pub fn value_and_gradient(&self, f: &Signal) -> Result<(f64, Signal)> {
        let (v, g) = self.eval(f, true)?;
        Ok((v, g.expect("gradient requested")))
    }

    fn eval(&self, f: &Signal, with_grad: bool) -> Result<(f64, Option<Signal>)> {
        self.grid.ensure_matches(f.grid())?;
        let nf = nonzero_norm_sq(f)?;
        let exec = self.exec;
        let grid = self.grid;
        let wrap = |v: Vec<Complex64>| Signal::new(grid, v).expect("grid length");
        match &self.inner {
            Compiled::Ambiguity { p, mask, rows } => {
                let (phi, dphi) = ambiguity_power(&self.kernel, f, mask, rows, *p, exec, with_grad);
                let j = phi.powf(1.0 / p) / nf;
                let grad = dphi.map(|d| {
                    // grad J = (1/p) Phi^{1/p-1} grad Phi / N - J grad N / N, grad N = 2 f
                    let a = if phi > 0.0 { phi.powf(1.0 / p - 1.0) / (p * nf) } else { 0.0 };
                    let b = 2.0 * j / nf;
                    wrap(combine(&d, a, f.samples(), b))
                });
                Ok((j, grad))
            }
            Compiled::Linf { mask, rows } => {
                if with_grad {
                    return Err(Error::Unsupported("the L-infinity objective has no gradient".into()));
                }
                let data = self.kernel.rows(f.samples(), f.samples(), rows, exec);
                let n = grid.n();
                let h = n / 2;
                let origin = rows.iter().position(|&k| k == h).expect("origin row included");
                let peak = data[origin][h].norm();
                let mut best = 0.0f64;
                for (i, &k) in rows.iter().enumerate() {
                    for l in 0..n {
                        if mask.contains(k, l) {
                            best = best.max(data[i][l].norm());
                        }
                    }
                }
                Ok((best / peak, None))
            }
            Compiled::TimeCorr { p, support } => {
                if with_grad {
                    return Err(Error::Unsupported("the time-correlation objective has no gradient".into()));
                }
                let fhat = fourier(f);
                let power: Vec<Complex64> = fhat
                    .samples()
                    .iter()
                    .map(|v| Complex64::new(v.norm_sqr(), 0.0))
                    .collect();
                let corr = inverse_fourier(&Signal::new(*fhat.grid(), power)?);
                let s: f64 = support
                    .indices()
                    .into_iter()
                    .map(|k| abs_pow(corr.samples()[k], *p))
                    .sum();
                Ok(((s * grid.dx()).powf(1.0 / p) / nf, None))
            }
            Compiled::FixedWindow { p, g, mask, rows } => {
                let (phi, dphi) =
                    window_power(&self.kernel, f, g, Some(mask), rows, *p, exec, with_grad);
                let norm = nf.sqrt();
                let j = phi.powf(1.0 / p) / norm;
                let grad = dphi.map(|d| {
                    let a = if phi > 0.0 { phi.powf(1.0 / p - 1.0) / (p * norm) } else { 0.0 };
                    wrap(combine(&d, a, f.samples(), j / nf))
                });
                Ok((j, grad))
            }
            Compiled::Mq {
                p,
                q,
                g,
                mask,
                rows,
                lattice,
            } => {
                let (phi, dphi) = ambiguity_power(&self.kernel, f, mask, rows, *p, exec, with_grad);
                let (s, ds) = match lattice {
                    None => {
                        let all: Vec<usize> = (0..grid.n()).collect();
                        window_power(&self.kernel, f, g, None, &all, *q, exec, with_grad)
                    }
                    Some(lat) => self.gabor_power(f, g, lat, *q, with_grad),
                };
                let norm = s.powf(1.0 / q);
                let num = phi.powf(1.0 / p);
                let j = num / (norm * norm);
                let grad = match (dphi, ds) {
                    (Some(dphi), Some(ds)) => {
                        // grad J = (1/p) Phi^{1/p-1} grad Phi / N^2 - 2 Phi^{1/p} grad N / N^3
                        let a = if phi > 0.0 { phi.powf(1.0 / p - 1.0) / (p * norm * norm) } else { 0.0 };
                        let dn = s.powf(1.0 / q - 1.0) / q;
                        let b = 2.0 * num * dn / norm.powi(3);
                        Some(wrap(combine(&dphi, a, &ds, b)))
                    }
                    _ => None,
                };
                Ok((j, grad))
            }
        }
    }

    /// `S = sum_lambda |c_lambda|^q` and `grad S = sum q |c|^{q-2} c pi(lambda) g`.
    fn gabor_power(
        &self,
        f: &Signal,
        g: &Signal,
        lat: &ResolvedLattice,
        q: f64,
        with_grad: bool,
    ) -> (f64, Option<Vec<Complex64>>) {
        let coeffs = gabor::coefficients_with(&self.kernel, f, g, lat, self.exec);
        let s: f64 = coeffs.iter().map(|c| abs_pow(*c, q)).sum();
        if !with_grad {
            return (s, None);
        }
        let n = self.grid.n();
        let w = self.grid.cell_area();
        let m = lat.cols.len();
        let full: Vec<Vec<Complex64>> = (0..lat.rows.len())
            .map(|i| {
                let mut row = vec![Complex64::default(); n];
                for (j, &l) in lat.cols.iter().enumerate() {
                    let c = coeffs[i * m + j];
                    // the adjoint kernel multiplies by the cell area
                    row[l] = c * (q * grad_weight(c, q) / w);
                }
                row
            })
            .collect();
        (s, Some(self.kernel.adjoint(g.samples(), &lat.rows, &full, self.exec)))
    }
}

/// `a x - b y`, elementwise.
fn combine(x: &[Complex64], a: f64, y: &[Complex64], b: f64) -> Vec<Complex64> {
    x.iter().zip(y).map(|(u, v)| u * a - v * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::grid::PhasePoint;
    use crate::signal::{indicator, seeded_rng, white_noise};
    use crate::transform::{ambiguity, timefreq_shift};

    fn grid64() -> TimeGrid {
        TimeGrid::self_dual(64).unwrap()
    }

    #[test]
    fn constant_array_gives_measure_root() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(2.0), &grid).unwrap();
        let ones = TfArray::new(grid, vec![Complex64::new(1.0, 0.0); 64 * 64]).unwrap();
        let v = lp_on_domain(&ones, &mask, 2.0).unwrap();
        assert!((v - mask.measure().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn objective_matches_full_ambiguity() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(2.5), &grid).unwrap();
        let f = white_noise(grid, &mut seeded_rng(3));
        let a = ambiguity(&f).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let direct = lp_on_domain(&a, &mask, p).unwrap() / f.norm_sq();
            let fast = objective_ambiguity(&f, &mask, p).unwrap();
            assert!((direct - fast).abs() < 1e-13 * direct.max(1.0), "p={p}");
        }
    }

    #[test]
    fn scale_invariance() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(2.0), &grid).unwrap();
        let f = white_noise(grid, &mut seeded_rng(1));
        let g = f.scaled(Complex64::new(3.0, -4.0));
        let a = objective_ambiguity(&f, &mask, 3.0).unwrap();
        let b = objective_ambiguity(&g, &mask, 3.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn shift_invariance() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(2.0), &grid).unwrap();
        let f = white_noise(grid, &mut seeded_rng(2));
        let z = PhasePoint::new(5.0 * grid.dx(), -3.0 * grid.domega());
        let a = objective_ambiguity(&f, &mask, 2.0).unwrap();
        let b = objective_ambiguity(&timefreq_shift(&f, z).unwrap(), &mask, 2.0).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let grid = TimeGrid::self_dual(32).unwrap();
        let mask = rasterize(&DomainSpec::centered_ball(1.5), &grid).unwrap();
        let mut rng = seeded_rng(11);
        let f = white_noise(grid, &mut rng);
        for p in [1.5, 2.0, 3.0] {
            let obj = Objective::ambiguity(mask.clone(), p).unwrap();
            let (_, grad) = obj.value_and_gradient(&f).unwrap();
            let v = white_noise(grid, &mut rng);
            let h = 1e-5;
            let fd = (obj.value(&f.axpy(h, &v).unwrap()).unwrap()
                - obj.value(&f.axpy(-h, &v).unwrap()).unwrap())
                / (2.0 * h);
            let an = v.inner(&grad).unwrap().re;
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "p={p}: {fd} vs {an}");
        }
    }

    #[test]
    fn linf_is_one_with_origin() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(1.0), &grid).unwrap();
        let f = white_noise(grid, &mut seeded_rng(4));
        assert_eq!(objective_linf(&f, &mask).unwrap(), 1.0);
    }

    #[test]
    fn linf_has_no_gradient() {
        let grid = grid64();
        let mask = rasterize(&DomainSpec::centered_ball(1.0), &grid).unwrap();
        let f = white_noise(grid, &mut seeded_rng(4));
        let obj = Objective::linf(mask).unwrap();
        assert!(matches!(obj.value_and_gradient(&f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn timecorr_matches_direct_lags() {
        let grid = TimeGrid::new(256, 1.0 / 16.0).unwrap();
        let support = rasterize_time(&TimeSet::interval(0.0, 1.0), &grid).unwrap();
        let f = indicator(grid, -2.0, 2.0);
        let n = grid.n() as i64;
        let mut s = 0.0;
        for k in support.indices() {
            let m = k as i64 - n / 2;
            let c: Complex64 = (0..n)
                .map(|j| f.samples()[j as usize] * f.samples()[(j - m).rem_euclid(n) as usize].conj())
                .sum::<Complex64>()
                * grid.dx();
            s += c.norm();
        }
        let direct = s * grid.dx() / f.norm_sq();
        let fast = objective_timecorr(&f, &support, 1.0).unwrap();
        assert!((direct - fast).abs() < 1e-12);
    }

    #[test]
    fn mq_two_is_moyal() {
        let grid = grid64();
        let f = white_noise(grid, &mut seeded_rng(5));
        let g = gaussian(grid, 1.0);
        let m2 = mq_norm_continuous(&f, &g, 2.0).unwrap();
        assert!((m2 - f.norm() * g.norm()).abs() < 1e-10);
    }

    #[test]
    fn amalgam_of_small_support_is_l2() {
        let grid = grid64();
        let mut arr = TfArray::zeros(grid);
        let n = grid.n();
        arr.values_mut()[32 * n + 32] = Complex64::new(2.0, 0.0);
        arr.values_mut()[33 * n + 32] = Complex64::new(0.0, 1.0);
        let v = amalgam_norm(&arr, 1.0).unwrap();
        assert!((v - arr.l2_norm()).abs() < 1e-12);
        assert_eq!(amalgam_norm(&TfArray::zeros(grid), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = ObjectiveSpec {
            kind: ObjectiveKind::MqNormalizedLp {
                p: 2.0,
                q: 1.0,
                window: WindowSpec::Gaussian { lambda: 1.0 },
                norm: MqFlavor::Gabor {
                    a: 0.5,
                    b: 0.5,
                    radius: None,
                },
            },
            domain: Some(DomainSpec::centered_ball(2.0)),
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"MqNormalizedLp\""));
        let back: ObjectiveSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ObjectiveSpec>(r#"{"kind":"Nope","p":2}"#).is_err());
    }
}
