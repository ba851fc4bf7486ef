//! Time-frequency shifts, the Fourier transform, the STFT and the
//! (cross-)ambiguity function on the periodic lattice.
//!
//! The STFT is `V_g f(x_k, omega_l) = <f, pi(x_k, omega_l) g>` with the grid
//! inner product; each row `k` is a centered FFT of `f * conj(T_{x_k} g)`.
//! The ambiguity function is stored as `exp(pi i x omega) V_f f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{unit_root, CenteredFft};
use crate::grid::{PhasePoint, TimeGrid};
use crate::par::Execution;
use crate::signal::Signal;
use crate::tfarray::TfArray;

/// `pi(z) f (t) = exp(2 pi i t omega) f(t - x)` for a lattice point `z`.
pub fn timefreq_shift(f: &Signal, z: PhasePoint) -> Result<Signal> {
    let grid = *f.grid();
    let (m, r) = grid.shift_steps(z)?;
    let n = grid.n() as i64;
    let half = n / 2;
    let src = f.samples();
    let samples = (0..n)
        .map(|k| {
            let from = (k - m).rem_euclid(n) as usize;
            src[from] * unit_root((k - half) * r, n)
        })
        .collect();
    Signal::new(grid, samples)
}

/// Circular translation by `x` (a lattice multiple of `dx`).
pub fn translate(f: &Signal, x: f64) -> Result<Signal> {
    timefreq_shift(f, PhasePoint::new(x, 0.0))
}

/// `f_hat(omega_l) = sum_k f_k exp(-2 pi i t_k omega_l) dx`, returned on the dual grid.
pub fn fourier(f: &Signal) -> Signal {
    let grid = *f.grid();
    let mut buf = f.samples().to_vec();
    CenteredFft::new(grid.n()).forward_alloc(&mut buf);
    let dx = grid.dx();
    buf.iter_mut().for_each(|v| *v *= dx);
    Signal::new(grid.dual(), buf).expect("length preserved")
}

/// Inverse of [`fourier`]; the argument lives on a frequency grid.
pub fn inverse_fourier(fhat: &Signal) -> Signal {
    let grid = *fhat.grid();
    let mut buf = fhat.samples().to_vec();
    CenteredFft::new(grid.n()).inverse_alloc(&mut buf);
    let dw = grid.dx();
    buf.iter_mut().for_each(|v| *v *= dw);
    Signal::new(grid.dual(), buf).expect("length preserved")
}

/// Reusable row kernel for STFTs and their adjoints on one grid.
#[derive(Debug, Clone)]
pub(crate) struct StftKernel {
    grid: TimeGrid,
    fft: CenteredFft,
}

impl StftKernel {
    pub(crate) fn new(grid: TimeGrid) -> Self {
        StftKernel {
            grid,
            fft: CenteredFft::new(grid.n()),
        }
    }

    #[inline]
    fn window_index(&self, k: usize, j: usize) -> usize {
        // t_k - x_j = t_{k - j + n/2}
        let n = self.grid.n();
        (k + n + n / 2 - j) % n
    }

    /// Row `j` of `V_g f`.
    pub(crate) fn row(&self, f: &[Complex64], g: &[Complex64], j: usize) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| f[k] * g[self.window_index(k, j)].conj())
            .collect();
        let mut scratch = vec![Complex64::default(); self.fft.scratch_len()];
        self.fft.forward(&mut buf, &mut scratch);
        let dx = self.grid.dx();
        buf.iter_mut().for_each(|v| *v *= dx);
        buf
    }

    pub(crate) fn rows(
        &self,
        f: &[Complex64],
        g: &[Complex64],
        rows: &[usize],
        exec: Execution,
    ) -> Vec<Vec<Complex64>> {
        exec.map_slice(rows, |&j| self.row(f, g, j))
    }

    /// `sum_{j in rows} sum_l w c_{jl} pi(x_j, omega_l) g`, accumulated in row order.
    pub(crate) fn adjoint(
        &self,
        g: &[Complex64],
        rows: &[usize],
        coeffs: &[Vec<Complex64>],
        exec: Execution,
    ) -> Vec<Complex64> {
        let n = self.grid.n();
        let w = self.grid.cell_area();
        let parts = exec.map(rows.len(), |i| {
            let j = rows[i];
            let mut buf = coeffs[i].clone();
            let mut scratch = vec![Complex64::default(); self.fft.scratch_len()];
            self.fft.inverse(&mut buf, &mut scratch);
            for (k, v) in buf.iter_mut().enumerate() {
                *v *= g[self.window_index(k, j)] * w;
            }
            buf
        });
        let mut out = vec![Complex64::default(); n];
        for part in parts {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        out
    }
}

fn check_pair(f: &Signal, g: &Signal) -> Result<()> {
    f.grid().ensure_matches(g.grid())?;
    if g.norm_sq() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    Ok(())
}

pub fn stft(f: &Signal, g: &Signal) -> Result<TfArray> {
    stft_with(f, g, Execution::default())
}

pub fn stft_with(f: &Signal, g: &Signal, exec: Execution) -> Result<TfArray> {
    check_pair(f, g)?;
    let grid = *f.grid();
    let rows: Vec<usize> = (0..grid.n()).collect();
    let data = StftKernel::new(grid).rows(f.samples(), g.samples(), &rows, exec);
    Ok(TfArray::from_rows(grid, data))
}

/// Selected rows of `V_g f`, in the order given.
pub fn stft_rows(f: &Signal, g: &Signal, rows: &[usize], exec: Execution) -> Result<Vec<Vec<Complex64>>> {
    check_pair(f, g)?;
    Ok(StftKernel::new(*f.grid()).rows(f.samples(), g.samples(), rows, exec))
}

/// Adjoint STFT `V_g^* F = sum_z F(z) pi(z) g dx domega`.
pub fn stft_adjoint(g: &Signal, coeffs: &TfArray) -> Result<Signal> {
    stft_adjoint_with(g, coeffs, Execution::default())
}

pub fn stft_adjoint_with(g: &Signal, coeffs: &TfArray, exec: Execution) -> Result<Signal> {
    g.grid().ensure_matches(coeffs.grid())?;
    let grid = *g.grid();
    let n = grid.n();
    let rows: Vec<usize> = (0..n).collect();
    let data: Vec<Vec<Complex64>> = rows.iter().map(|&j| coeffs.row(j).to_vec()).collect();
    let out = StftKernel::new(grid).adjoint(g.samples(), &rows, &data, exec);
    Signal::new(grid, out)
}

/// `exp(pi i x_k omega_l)` on the lattice.
#[inline]
pub fn ambiguity_phase(grid: &TimeGrid, k: usize, l: usize) -> Complex64 {
    let n = grid.n() as i64;
    let a = k as i64 - n / 2;
    let b = l as i64 - n / 2;
    // x omega = a b / n, so exp(pi i a b / n) = exp(2 pi i a b / (2n))
    unit_root(a * b, 2 * n)
}

pub fn cross_ambiguity(f: &Signal, g: &Signal) -> Result<TfArray> {
    cross_ambiguity_with(f, g, Execution::default())
}

pub fn cross_ambiguity_with(f: &Signal, g: &Signal, exec: Execution) -> Result<TfArray> {
    let mut arr = stft_with(f, g, exec)?;
    let grid = *arr.grid();
    let n = grid.n();
    for (i, v) in arr.values_mut().iter_mut().enumerate() {
        *v *= ambiguity_phase(&grid, i / n, i % n);
    }
    Ok(arr)
}

pub fn ambiguity(f: &Signal) -> Result<TfArray> {
    cross_ambiguity(f, f)
}

pub fn ambiguity_with(f: &Signal, exec: Execution) -> Result<TfArray> {
    cross_ambiguity_with(f, f, exec)
}

/// `V_g f` at arbitrary points, using band-limited translation of the window
/// and an exact non-periodic Fourier sum in frequency. Points sharing the same
/// `x` reuse one translated window.
pub fn stft_at_points(f: &Signal, g: &Signal, points: &[PhasePoint], exec: Execution) -> Result<Vec<Complex64>> {
    check_pair(f, g)?;
    let grid = *f.grid();
    let n = grid.n();
    let times = grid.times();
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let products: Vec<Vec<Complex64>> = exec.map_slice(&xs, |&x| {
        let shifted: Vec<f64> = times.iter().map(|t| t - x).collect();
        let gx = g.eval_bandlimited(&shifted);
        (0..n).map(|k| f.samples()[k] * gx[k].conj()).collect()
    });
    let dx = grid.dx();
    Ok(exec.map_slice(points, |p| {
        let idx = xs
            .binary_search_by(|v| v.total_cmp(&p.x))
            .expect("x collected above");
        let h = &products[idx];
        let mut acc = Complex64::default();
        for (k, v) in h.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * times[k] * p.omega);
        }
        acc * dx
    }))
}

/// The three generators of the metaplectic group used for covariance checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metaplectic {
    /// Fourier transform; symplectic matrix `J = [[0, 1], [-1, 0]]`.
    RotationJ,
    /// `f(t) -> lambda^{-1/2} f(t / lambda)`.
    Dilation { lambda: f64 },
    /// `f(t) -> exp(pi i c t^2) f(t)`.
    Chirp { c: f64 },
}

impl Metaplectic {
    /// Point `A z` with `|A(U f)(z)| = |A(f)(A z)|`.
    pub fn image(&self, z: PhasePoint) -> PhasePoint {
        match *self {
            Metaplectic::RotationJ => PhasePoint::new(z.omega, -z.x),
            Metaplectic::Dilation { lambda } => PhasePoint::new(z.x / lambda, lambda * z.omega),
            Metaplectic::Chirp { c } => PhasePoint::new(z.x, z.omega - c * z.x),
        }
    }
}

/// Applies a metaplectic generator. Off-lattice resampling uses the
/// band-limited interpolant, with zero outside the covered time box.
pub fn metaplectic_apply(f: &Signal, kind: Metaplectic) -> Result<Signal> {
    let grid = *f.grid();
    match kind {
        Metaplectic::RotationJ => {
            let fhat = fourier(f);
            if grid.is_self_dual() {
                Signal::new(grid, fhat.into_samples())
            } else {
                let vals = fhat.eval_bandlimited(&grid.times());
                Signal::new(grid, vals)
            }
        }
        Metaplectic::Dilation { lambda } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidDilation(lambda));
            }
            let ts: Vec<f64> = grid.times().iter().map(|t| t / lambda).collect();
            let amp = lambda.sqrt().recip();
            let vals = f.eval_bandlimited(&ts).into_iter().map(|v| v * amp).collect();
            Signal::new(grid, vals)
        }
        Metaplectic::Chirp { c } => {
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("chirp rate {c}")));
            }
            let vals = f
                .samples()
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let t = grid.t(k);
                    v * Complex64::from_polar(1.0, std::f64::consts::PI * c * t * t)
                })
                .collect();
            Signal::new(grid, vals)
        }
    }
}

/// Normalized first moments of the spectrogram `|V_g f|^2`.
pub fn center_of_mass(f: &Signal, g: &Signal) -> Result<PhasePoint> {
    center_of_mass_with(f, g, Execution::default())
}

pub fn center_of_mass_with(f: &Signal, g: &Signal, exec: Execution) -> Result<PhasePoint> {
    if f.norm_sq() == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let spec = stft_with(f, g, exec)?;
    let grid = *spec.grid();
    let n = grid.n();
    let (mut mass, mut mx, mut mw) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let x = grid.t(k);
        for l in 0..n {
            let m = spec.get(k, l).norm_sqr();
            mass += m;
            mx += m * x;
            mw += m * grid.omega(l);
        }
    }
    if mass == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(PhasePoint::new(mx / mass, mw / mass))
}
