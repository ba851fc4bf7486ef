//! Independent reference implementations used as test oracles. Nothing here
//! goes through the FFT paths of the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use amblab::{DomainMask, Signal, TimeGrid};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// `exp(2 pi i t omega) g(t - x)` sampled directly, with periodic wrap of `g`.
pub fn shifted_window(g: &Signal, k: usize, l: usize) -> Vec<Complex64> {
    let grid = *g.grid();
    let n = grid.n() as i64;
    let m = k as i64 - n / 2;
    let omega = grid.omega(l);
    (0..n)
        .map(|a| {
            let t = grid.t(a as usize);
            let src = (a - m).rem_euclid(n) as usize;
            g.samples()[src] * Complex64::from_polar(1.0, 2.0 * PI * t * omega)
        })
        .collect()
}

/// `V_g f(x_k, omega_l) = sum_a f_a conj(pi(z) g)_a dx` by direct summation.
pub fn direct_stft(f: &Signal, g: &Signal) -> Vec<Complex64> {
    let grid = *f.grid();
    let n = grid.n();
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            let w = shifted_window(g, k, l);
            let s: Complex64 = f.samples().iter().zip(&w).map(|(a, b)| a * b.conj()).sum();
            out.push(s * grid.dx());
        }
    }
    out
}

/// Dense matrix of `f -> sum_{z in Omega} w <f, pi(z) g> pi(z) g` on sample vectors.
pub fn dense_localization(g: &Signal, mask: &DomainMask) -> DMatrix<Complex64> {
    let grid = *g.grid();
    let n = grid.n();
    let w = grid.cell_area() * grid.dx();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            if !mask.contains(k, l) {
                continue;
            }
            let v = shifted_window(g, k, l);
            for a in 0..n {
                for b in 0..n {
                    m[(a, b)] += v[a] * v[b].conj() * w;
                }
            }
        }
    }
    m
}

pub fn dense_top_eigenvalue(m: DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(m);
    eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn dense_apply(m: &DMatrix<Complex64>, f: &Signal) -> Vec<Complex64> {
    let v = nalgebra::DVector::from_column_slice(f.samples());
    (m * v).iter().copied().collect()
}

/// Central difference `(J(f + h v) - J(f - h v)) / 2h`.
pub fn central_difference<F>(objective: F, f: &Signal, v: &Signal, h: f64) -> f64
where
    F: Fn(&Signal) -> f64,
{
    let plus = objective(&f.axpy(h, v).unwrap());
    let minus = objective(&f.axpy(-h, v).unwrap());
    (plus - minus) / (2.0 * h)
}

pub fn self_dual(n: usize) -> TimeGrid {
    TimeGrid::self_dual(n).unwrap()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
