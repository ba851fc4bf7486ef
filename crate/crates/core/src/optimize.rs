//! Maximization drivers: projected gradient ascent with recentering, the
//! spectral solver for the fixed-window quadratic problem, a self-consistent
//! iteration for the self-windowed quadratic problem, and Gaussian scans.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::domain::DomainMask;
use crate::error::{Error, Result};
use crate::functionals::{Objective, ObjectiveKind, ObjectiveSpec};
use crate::grid::{PhasePoint, TimeGrid};
use crate::localization::{default_start, top_eigenpair, Localization};
use crate::par::Execution;
use crate::signal::{gaussian, gaussian_at, seeded_rng, white_noise, Signal};
use crate::transform::{center_of_mass_with, timefreq_shift, StftKernel};

/// Largest change of the objective tolerated across a recentering shift.
pub const RECENTER_TOL: f64 = 1e-9;
/// Line-search steps below this are treated as a stall.
const MIN_STEP: f64 = 1e-16;
/// Window over which the relative objective change is measured.
const STALL_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ProjGrad,
    PowerIter,
    SelfConsistent,
    GaussianScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Armijo {
    pub c: f64,
    pub shrink: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Armijo { c: 1e-4, shrink: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Start {
    Random,
    Gaussian { lambda: f64 },
    File { path: PathBuf },
}

/// Parameter grid of the Gaussian-family scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanGrid {
    pub lambdas: Vec<f64>,
    pub centers: Vec<PhasePoint>,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            lambdas: (-8..=8).map(|i| 2f64.powf(i as f64 / 8.0)).collect(),
            centers: vec![PhasePoint::ORIGIN],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    pub step0: f64,
    pub armijo: Armijo,
    pub tol_grad: f64,
    pub tol_obj: f64,
    /// Recenter every this many iterations; 0 disables recentering.
    pub recenter_every: usize,
    pub seed: u64,
    pub start: Start,
    pub scan: ScanGrid,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: Method::ProjGrad,
            max_iters: 500,
            step0: 1.0,
            armijo: Armijo::default(),
            tol_grad: 1e-7,
            tol_obj: 1e-10,
            recenter_every: 10,
            seed: 0,
            start: Start::Gaussian { lambda: 1.0 },
            scan: ScanGrid::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad("step0 must be positive");
        }
        if !(self.armijo.shrink > 0.0 && self.armijo.shrink < 1.0) {
            return bad("armijo.shrink must lie in (0, 1)");
        }
        if !(self.armijo.c > 0.0 && self.armijo.c < 1.0) {
            return bad("armijo.c must lie in (0, 1)");
        }
        if !(self.tol_grad > 0.0 && self.tol_obj > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }

    /// Unit-norm start signal on `grid`.
    pub fn start_signal(&self, grid: &TimeGrid) -> Result<Signal> {
        match &self.start {
            Start::Random => Ok(white_noise(*grid, &mut seeded_rng(self.seed))),
            Start::Gaussian { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidDilation(*lambda));
                }
                Ok(gaussian(*grid, *lambda))
            }
            Start::File { path } => {
                let f = crate::io::read_signal(path)?;
                grid.ensure_matches(f.grid())?;
                f.normalized()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIters,
    Stalled,
}

/// Outcome of one optimization run. The final signal is not part of the
/// JSON form; it is persisted separately as CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub method: Method,
    pub status: Status,
    pub seed: u64,
    pub iterations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub objective_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    pub recenter_shifts: Vec<PhasePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanResult>,
    #[serde(skip)]
    pub final_signal: Signal,
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunReport {
    fn new(method: Method, seed: u64, initial: f64, signal: Signal) -> Self {
        RunReport {
            method,
            status: Status::MaxIters,
            seed,
            iterations: 0,
            initial_objective: initial,
            final_objective: initial,
            objective_trace: Vec::new(),
            grad_norm_trace: Vec::new(),
            recenter_shifts: Vec::new(),
            scan: None,
            final_signal: signal,
            wall_time: 0.0,
        }
    }
}

/// Riemannian gradient on the unit sphere: `grad - Re<grad, f> f`.
fn tangent(f: &Signal, grad: &Signal) -> Signal {
    let radial = grad.inner(f).expect("same grid").re;
    grad.axpy(-radial, f).expect("same grid")
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

/// Shifts `f` by minus its (snapped) spectrogram center of mass.
fn recenter(f: &Signal, window: &Signal, exec: Execution) -> Result<(Signal, PhasePoint)> {
    let c = center_of_mass_with(f, window, exec)?;
    let c = f.grid().snap(c);
    if c.x == 0.0 && c.omega == 0.0 {
        return Ok((f.clone(), c));
    }
    Ok((timefreq_shift(f, -c)?, c))
}

/// Armijo-backtracked gradient ascent on the unit sphere, with
/// renormalization as the retraction. Shift-invariant objectives are
/// recentered every `recenter_every` iterations.
pub fn proj_grad_ascent(objective: &Objective, cfg: &OptimizerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = cfg.start_signal(objective.grid())?;
    proj_grad_from(objective, start, cfg)
}

/// [`proj_grad_ascent`] from an explicit start signal.
pub fn proj_grad_from(objective: &Objective, start: Signal, cfg: &OptimizerConfig) -> Result<RunReport> {
    cfg.validate()?;
    if !objective.has_gradient() {
        return Err(Error::Unsupported("objective has no gradient; use a scan".into()));
    }
    let grid = *objective.grid();
    let window = gaussian(grid, 1.0);
    let exec = Execution::default();
    let recentering = cfg.recenter_every > 0 && objective.is_shift_invariant();

    let mut f = start.normalized()?;
    let (mut value, grad) = objective.value_and_gradient(&f)?;
    finite(value)?;
    let mut dir = tangent(&f, &grad);
    let mut gnorm = dir.norm();
    let mut report = RunReport::new(Method::ProjGrad, cfg.seed, value, f.clone());
    let mut step = cfg.step0;

    for it in 0..cfg.max_iters {
        if gnorm < cfg.tol_grad {
            report.status = Status::Converged;
            break;
        }
        let mut t = step;
        let accepted = loop {
            let cand = f.axpy(t, &dir)?.normalized()?;
            let v = finite(objective.value(&cand)?)?;
            if v >= value + cfg.armijo.c * t * gnorm * gnorm {
                break Some((cand, v));
            }
            t *= cfg.armijo.shrink;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((next, v)) = accepted else {
            report.status = Status::Stalled;
            break;
        };
        f = next;
        value = v;
        step = 2.0 * t;

        if recentering && (it + 1) % cfg.recenter_every == 0 {
            let (shifted, c) = recenter(&f, &window, exec)?;
            if c != PhasePoint::ORIGIN {
                let after = objective.value(&shifted)?;
                let drift = (after - value).abs();
                if drift > RECENTER_TOL {
                    return Err(Error::RecenterDrift(drift));
                }
                f = shifted;
                report.recenter_shifts.push(-c);
            }
        }

        let (v2, grad) = objective.value_and_gradient(&f)?;
        value = finite(v2)?;
        dir = tangent(&f, &grad);
        gnorm = dir.norm();
        report.objective_trace.push(value);
        report.grad_norm_trace.push(gnorm);
        report.iterations = it + 1;

        let tr = &report.objective_trace;
        if tr.len() > STALL_WINDOW {
            let old = tr[tr.len() - 1 - STALL_WINDOW];
            if (value - old).abs() <= cfg.tol_obj * value.abs() {
                report.status = Status::Converged;
                break;
            }
        }
    }
    if report.iterations == cfg.max_iters && report.status == Status::MaxIters && gnorm < cfg.tol_grad {
        report.status = Status::Converged;
    }
    report.final_objective = value;
    report.final_signal = f;
    Ok(report)
}

/// Top eigenpair of the localization operator for the fixed-window `p = 2` problem.
pub fn spectral_fixed_window(g: &Signal, mask: &DomainMask, cfg: &OptimizerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let op = Localization::new(g, mask)?;
    let gn = g.norm();
    let start = match cfg.start {
        Start::Random => white_noise(*g.grid(), &mut seeded_rng(cfg.seed)),
        _ => default_start(g),
    };
    let initial = (op.rayleigh(&start)?.max(0.0)).sqrt() / gn;
    let pair = op.top_eigenpair(&start, cfg.tol_grad, cfg.max_iters.max(1) * 40)?;
    // objective = ||V_g f||_{L^2(Omega)} / ||f|| = sqrt(lambda)
    let value = pair.value.max(0.0).sqrt();
    let mut report = RunReport::new(Method::PowerIter, cfg.seed, initial * gn, pair.vector);
    report.status = Status::Converged;
    report.iterations = pair.iterations;
    report.objective_trace.push(value);
    report.grad_norm_trace.push(pair.residual);
    report.final_objective = value;
    Ok(report)
}

/// Fixed-point iteration `f <- top eigenvector of V_f^* chi_Omega V_f` for the
/// self-windowed `p = 2` objective. Returns the best iterate seen.
pub fn self_consistent(mask: &DomainMask, cfg: &OptimizerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let grid = *mask.grid();
    let objective = Objective::ambiguity(mask.clone(), 2.0)?;
    let kernel = StftKernel::new(grid);
    let rows = mask.rows();
    let exec = Execution::default();
    let mut f = cfg.start_signal(&grid)?;
    let initial = objective.value(&f)?;
    let mut report = RunReport::new(Method::SelfConsistent, cfg.seed, initial, f.clone());
    let mut best = initial;
    let mut prev = initial;
    report.status = Status::MaxIters;
    for it in 0..cfg.max_iters {
        let window = f.samples().to_vec();
        let apply = |v: &[num_complex::Complex64]| {
            let mut data = kernel.rows(v, &window, &rows, exec);
            for (row, &k) in data.iter_mut().zip(&rows) {
                for (l, x) in row.iter_mut().enumerate() {
                    if !mask.contains(k, l) {
                        *x = Default::default();
                    }
                }
            }
            kernel.adjoint(&window, &rows, &data, exec)
        };
        let pair = match top_eigenpair(grid, apply, &f, cfg.tol_grad, 4000) {
            Ok(p) => p,
            Err(Error::NoConvergence { .. }) => {
                report.status = Status::Stalled;
                break;
            }
            Err(e) => return Err(e),
        };
        f = pair.vector;
        let value = finite(objective.value(&f)?)?;
        report.objective_trace.push(value);
        report.grad_norm_trace.push(pair.residual);
        report.iterations = it + 1;
        if value > best {
            best = value;
            report.final_signal = f.clone();
        }
        if (value - prev).abs() <= cfg.tol_obj * value.abs() {
            report.status = Status::Converged;
            break;
        }
        prev = value;
    }
    report.final_objective = best;
    Ok(report)
}

/// Best member of the Gaussian family found by [`gaussian_family_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub best_objective: f64,
    pub lambda: f64,
    pub center: PhasePoint,
}

/// Values within this relative distance of the maximum count as ties.
pub const SCAN_TIE_TOL: f64 = 1e-9;

fn tie_key(lambda: f64, c: PhasePoint) -> [f64; 6] {
    [lambda.ln().abs(), c.x.abs(), c.omega.abs(), lambda, c.x, c.omega]
}

/// Evaluates `objective` on every `pi(c) D_lambda g_0`; ties within
/// [`SCAN_TIE_TOL`] go to the candidate closest to the standard Gaussian
/// at the origin (lexicographic in `|ln lambda|, |x|, |omega|`).
pub fn gaussian_family_scan(objective: &Objective, lambdas: &[f64], centers: &[PhasePoint]) -> Result<ScanResult> {
    gaussian_family_scan_with(objective, lambdas, centers, Execution::default())
}

pub fn gaussian_family_scan_with(
    objective: &Objective,
    lambdas: &[f64],
    centers: &[PhasePoint],
    exec: Execution,
) -> Result<ScanResult> {
    if lambdas.is_empty() || centers.is_empty() {
        return Err(Error::InvalidParameter("scan grids must be nonempty".into()));
    }
    if let Some(&l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidDilation(l));
    }
    let grid = *objective.grid();
    let params: Vec<(f64, PhasePoint)> = lambdas
        .iter()
        .flat_map(|&l| centers.iter().map(move |&c| (l, c)))
        .collect();
    let values = exec.map_slice(&params, |&(l, c)| objective.value(&gaussian_at(grid, l, c)));
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let (i, _) = params
        .iter()
        .enumerate()
        .filter(|(i, _)| values[*i] >= top - SCAN_TIE_TOL * top.abs())
        .min_by(|(_, a), (_, b)| {
            let (ka, kb) = (tie_key(a.0, a.1), tie_key(b.0, b.1));
            ka.iter()
                .zip(&kb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one candidate attains the maximum");
    Ok(ScanResult {
        best_objective: values[i],
        lambda: params[i].0,
        center: params[i].1,
    })
}

/// Runs the method selected in `cfg` on the objective described by `spec`.
pub fn optimize(spec: &ObjectiveSpec, grid: &TimeGrid, cfg: &OptimizerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let started = std::time::Instant::now();
    let mut report = match cfg.method {
        Method::ProjGrad => proj_grad_ascent(&spec.compile(grid)?, cfg)?,
        Method::PowerIter => match &spec.kind {
            ObjectiveKind::FixedWindowLp { p, window } if *p == 2.0 => {
                let obj = spec.compile(grid)?;
                let mask = obj.mask().expect("fixed-window objectives have a domain");
                spectral_fixed_window(&window.resolve(grid)?, mask, cfg)?
            }
            _ => {
                return Err(Error::Unsupported(
                    "PowerIter needs a FixedWindowLp objective with p = 2".into(),
                ))
            }
        },
        Method::SelfConsistent => match &spec.kind {
            ObjectiveKind::AmbiguityLp { p } if *p == 2.0 => {
                let obj = spec.compile(grid)?;
                self_consistent(obj.mask().expect("ambiguity objectives have a domain"), cfg)?
            }
            _ => {
                return Err(Error::Unsupported(
                    "SelfConsistent needs an AmbiguityLp objective with p = 2".into(),
                ))
            }
        },
        Method::GaussianScan => {
            let obj = spec.compile(grid)?;
            let res = gaussian_family_scan(&obj, &cfg.scan.lambdas, &cfg.scan.centers)?;
            let f = gaussian_at(*grid, res.lambda, res.center);
            let mut r = RunReport::new(Method::GaussianScan, cfg.seed, res.best_objective, f);
            r.status = Status::Converged;
            r.iterations = 1;
            r.objective_trace.push(res.best_objective);
            r.final_objective = res.best_objective;
            r.scan = Some(res);
            r
        }
    };
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{rasterize, DomainSpec};

    #[test]
    fn config_defaults_fill_missing_fields() {
        let cfg: OptimizerConfig = serde_json::from_str(r#"{"max_iters": 7}"#).unwrap();
        assert_eq!(cfg.max_iters, 7);
        assert_eq!(cfg.recenter_every, 10);
        assert_eq!(cfg.armijo, Armijo::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = OptimizerConfig::default();
        cfg.armijo.shrink = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ascent_is_monotone_and_bounded() {
        let grid = TimeGrid::self_dual(64).unwrap();
        let mask = rasterize(&DomainSpec::centered_ball(2.0), &grid).unwrap();
        let obj = Objective::ambiguity(mask.clone(), 3.0).unwrap();
        let cfg = OptimizerConfig {
            start: Start::Random,
            seed: 5,
            max_iters: 60,
            ..Default::default()
        };
        let r = proj_grad_ascent(&obj, &cfg).unwrap();
        let mut prev = r.initial_objective;
        for &v in &r.objective_trace {
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        assert_eq!(r.objective_trace.len(), r.iterations);
        assert!(r.final_objective <= mask.measure().powf(1.0 / 3.0) * (1.0 + 1e-6));
        assert!((r.final_signal.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scan_rejected() {
        let grid = TimeGrid::self_dual(32).unwrap();
        let mask = rasterize(&DomainSpec::centered_ball(1.0), &grid).unwrap();
        let obj = Objective::ambiguity(mask, 2.0).unwrap();
        assert!(gaussian_family_scan(&obj, &[], &[PhasePoint::ORIGIN]).is_err());
    }
}
