//! Centered discrete Fourier transforms.
//!
//! With `t_k = (k - n/2) dx` and `omega_l = (l - n/2) domega` the kernel
//! `exp(-2 pi i t_k omega_l)` factors as `(-1)^(k + l + n/2) exp(-2 pi i k l / n)`,
//! so a centered transform is a plain FFT sandwiched between exact sign flips.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct CenteredFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CenteredFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CenteredFft").field("n", &self.n).finish()
    }
}

#[inline]
fn flip_signs(buf: &mut [Complex64], extra: bool) {
    for (k, v) in buf.iter_mut().enumerate() {
        if (k % 2 == 1) ^ extra {
            *v = -*v;
        }
    }
}

impl CenteredFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        CenteredFft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// `buf[l] <- sum_k buf[k] exp(-2 pi i (k - n/2)(l - n/2) / n)`, unnormalized.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        flip_signs(buf, false);
        self.forward.process_with_scratch(buf, scratch);
        flip_signs(buf, (self.n / 2) % 2 == 1);
    }

    /// `buf[k] <- sum_l buf[l] exp(+2 pi i (k - n/2)(l - n/2) / n)`, unnormalized.
    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        flip_signs(buf, false);
        self.inverse.process_with_scratch(buf, scratch);
        flip_signs(buf, (self.n / 2) % 2 == 1);
    }

    pub fn forward_alloc(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.forward(buf, &mut scratch);
    }

    pub fn inverse_alloc(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.inverse(buf, &mut scratch);
    }
}

/// `exp(2 pi i s / m)` for an integer numerator reduced modulo `m`.
#[inline]
pub fn unit_root(s: i64, m: i64) -> Complex64 {
    let r = s.rem_euclid(m);
    let theta = 2.0 * std::f64::consts::PI * (r as f64) / (m as f64);
    Complex64::from_polar(1.0, theta)
}
