//! Sampled signals on a [`TimeGrid`] and the inner-product geometry of L².
//!
//! All sums run left to right over the sample index, so norms and inner
//! products are reproducible bit for bit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::CenteredFft;
use crate::grid::{PhasePoint, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.n(),
                samples.len()
            )));
        }
        Ok(Signal { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Signal {
            grid,
            samples: vec![Complex64::default(); grid.n()],
        }
    }

    /// Samples `f(t_k)` of a function of time.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..grid.n()).map(|k| f(grid.t(k))).collect();
        Signal { grid, samples }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `sum_k |f_k|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other> = sum_k self_k conj(other_k) dx`.
    pub fn inner(&self, other: &Signal) -> Result<Complex64> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Signal) -> Complex64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn scaled(&self, c: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }

    /// Unit-norm copy; fails on the zero signal.
    pub fn normalized(&self) -> Result<Signal> {
        let nrm = self.norm();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::ZeroSignal);
        }
        Ok(self.scaled(Complex64::new(1.0 / nrm, 0.0)))
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Signal) -> Result<Signal> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(Signal {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        })
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.axpy(1.0, other)
    }

    /// Largest sample-wise deviation.
    pub fn max_abs_diff(&self, other: &Signal) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Fraction of the energy sitting in the outer 10% of the time box on either side.
    pub fn edge_mass_ratio(&self) -> f64 {
        let n = self.grid.n();
        let frame = (n / 10).max(1);
        let total: f64 = self.samples.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self
            .samples
            .iter()
            .enumerate()
            .filter(|(k, _)| *k < frame || *k >= n - frame)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        edge / total
    }

    /// Values of the trigonometric (band-limited) interpolant at arbitrary
    /// times; points outside the covered time box evaluate to zero.
    pub fn eval_bandlimited(&self, times: &[f64]) -> Vec<Complex64> {
        let grid = self.grid;
        let n = grid.n();
        let mut coeffs = self.samples.clone();
        CenteredFft::new(n).forward_alloc(&mut coeffs);
        let scale = 1.0 / n as f64;
        let (lo, hi) = grid.time_extent();
        let domega = grid.domega();
        times
            .iter()
            .map(|&t| {
                if t < lo || t >= hi {
                    return Complex64::default();
                }
                // exp(2 pi i t omega_l) built by recurrence from omega_0 = -n/2 domega
                let step = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t * domega);
                let mut phase = Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * t * grid.omega(0),
                );
                let mut acc = Complex64::default();
                for (l, c) in coeffs.iter().enumerate() {
                    if l % 64 == 0 {
                        phase = Complex64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * t * grid.omega(l),
                        );
                    }
                    acc += c * phase;
                    phase *= step;
                }
                acc * scale
            })
            .collect()
    }
}

/// L²-normalized Gaussian `lambda^{-1/2} 2^{1/4} exp(-pi t^2 / lambda^2)`.
pub fn gaussian(grid: TimeGrid, lambda: f64) -> Signal {
    gaussian_at(grid, lambda, PhasePoint::ORIGIN)
}

/// `pi(z)` applied analytically to the dilated Gaussian; `z` need not be on the lattice.
pub fn gaussian_at(grid: TimeGrid, lambda: f64, z: PhasePoint) -> Signal {
    let amp = 2f64.powf(0.25) / lambda.sqrt();
    Signal::from_fn(grid, |t| {
        let u = (t - z.x) / lambda;
        let env = amp * (-std::f64::consts::PI * u * u).exp();
        Complex64::from_polar(env, 2.0 * std::f64::consts::PI * t * z.omega)
    })
}

/// Indicator of the open interval `(a, b)` sampled at the grid points.
pub fn indicator(grid: TimeGrid, a: f64, b: f64) -> Signal {
    Signal::from_fn(grid, |t| {
        if t > a && t < b {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-norm complex white noise.
pub fn white_noise<R: Rng>(grid: TimeGrid, rng: &mut R) -> Signal {
    let samples = (0..grid.n())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Signal { grid, samples }
        .normalized()
        .expect("white noise is almost surely nonzero")
}

/// Unit-norm superposition of `atoms` time-frequency shifted Gaussians with
/// centers in the disc of radius `radius` and random complex weights. Smooth
/// and well localized, so it is safe for interpolation-based checks.
pub fn localized_random<R: Rng>(grid: TimeGrid, rng: &mut R, atoms: usize, radius: f64) -> Signal {
    let mut acc = Signal::zeros(grid);
    for _ in 0..atoms.max(1) {
        let r = radius * rng.random::<f64>().sqrt();
        let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let lambda = 0.7 + 0.6 * rng.random::<f64>();
        let z = PhasePoint::new(r * th.cos(), r * th.sin());
        let w = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let atom = gaussian_at(grid, lambda, z);
        for (a, b) in acc.samples.iter_mut().zip(atom.samples()) {
            *a += w * b;
        }
    }
    acc.normalized()
        .expect("a random Gaussian mixture is almost surely nonzero")
}
