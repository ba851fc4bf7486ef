mod common;

use std::f64::consts::PI;

use amblab::signal::{gaussian, localized_random, seeded_rng, white_noise};
use amblab::transform::{
    ambiguity, cross_ambiguity, fourier, metaplectic_apply, stft, stft_adjoint, stft_at_points, stft_with,
    timefreq_shift, Metaplectic,
};
use amblab::{Execution, PhasePoint, Signal, TfArray, TimeGrid};
use common::*;
use num_complex::Complex64;

#[test]
fn fft_stft_matches_direct_summation() {
    for grid in [self_dual(16), TimeGrid::new(24, 0.3).unwrap(), TimeGrid::new(18, 0.5).unwrap()] {
        let mut rng = seeded_rng(grid.n() as u64);
        let f = white_noise(grid, &mut rng);
        let g = white_noise(grid, &mut rng);
        let fast = stft(&f, &g).unwrap();
        let slow = direct_stft(&f, &g);
        assert!(max_abs_diff(fast.values(), &slow) < 1e-13, "n={}", grid.n());
    }
}

#[test]
fn ambiguity_is_phase_factor_times_stft() {
    let grid = self_dual(16);
    let f = white_noise(grid, &mut seeded_rng(1));
    let a = ambiguity(&f).unwrap();
    let v = direct_stft(&f, &f);
    for k in 0..16 {
        for l in 0..16 {
            let phase = Complex64::from_polar(1.0, PI * grid.t(k) * grid.omega(l));
            assert!((a.get(k, l) - phase * v[k * 16 + l]).norm() < 1e-13);
        }
    }
}

#[test]
fn adjoint_identity() {
    // <V_g f, F>_{L^2(lattice)} = <f, V_g^* F>
    let grid = self_dual(32);
    let mut rng = seeded_rng(4);
    let f = white_noise(grid, &mut rng);
    let g = white_noise(grid, &mut rng);
    let vals: Vec<Complex64> = (0..32 * 32)
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
        .collect();
    let big_f = TfArray::new(grid, vals).unwrap();
    let vf = stft(&f, &g).unwrap();
    let lhs: Complex64 = vf
        .values()
        .iter()
        .zip(big_f.values())
        .map(|(a, b)| a * b.conj())
        .sum::<Complex64>()
        * grid.cell_area();
    let rhs = f.inner(&stft_adjoint(&g, &big_f).unwrap()).unwrap();
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn moyal_identity_is_exact_on_the_lattice() {
    let grid = TimeGrid::new(48, 0.2).unwrap();
    let mut rng = seeded_rng(8);
    let f = white_noise(grid, &mut rng);
    let g = localized_random(grid, &mut rng, 2, 1.0);
    let v = stft(&f, &g).unwrap();
    let lhs = v.l2_norm().powi(2);
    assert!((lhs - f.norm_sq() * g.norm_sq()).abs() < 1e-12);
}

#[test]
fn inversion_formula() {
    // V_g^* V_g f = ||g||^2 f
    let grid = self_dual(64);
    let mut rng = seeded_rng(2);
    let f = white_noise(grid, &mut rng);
    let g = gaussian(grid, 1.0);
    let back = stft_adjoint(&g, &stft(&f, &g).unwrap()).unwrap();
    assert!(back.max_abs_diff(&f.scaled(Complex64::new(g.norm_sq(), 0.0))).unwrap() < 1e-12);
}

#[test]
fn cross_ambiguity_bounded_by_norms() {
    let grid = self_dual(64);
    let mut rng = seeded_rng(3);
    let f = white_noise(grid, &mut rng);
    let g = localized_random(grid, &mut rng, 3, 2.0);
    let a = cross_ambiguity(&f, &g).unwrap();
    let bound = f.norm() * g.norm();
    assert!(a.values().iter().all(|v| v.norm() <= bound * (1.0 + 1e-12)));
}

#[test]
fn gaussian_ambiguity_closed_form() {
    let grid = TimeGrid::new(256, 12.0 / 256.0).unwrap();
    let a = ambiguity(&gaussian(grid, 1.0)).unwrap();
    for k in (0..256).step_by(7) {
        for l in (0..256).step_by(5) {
            let (x, w) = (grid.t(k), grid.omega(l));
            let exact = (-PI * (x * x + w * w) / 2.0).exp();
            assert!((a.get(k, l).norm() - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn dilated_gaussian_ambiguity() {
    // |A(g_lambda)|(x, omega) = exp(-pi (x^2 / lambda^2 + lambda^2 omega^2) / 2)
    let grid = TimeGrid::new(512, 1.0 / 16.0).unwrap();
    let lambda = 2.0;
    let a = ambiguity(&gaussian(grid, lambda)).unwrap();
    let mut worst = 0.0f64;
    for k in 0..512 {
        for l in 0..512 {
            let (x, w) = (grid.t(k), grid.omega(l));
            let exact = (-PI * (x * x / (lambda * lambda) + lambda * lambda * w * w) / 2.0).exp();
            worst = worst.max((a.get(k, l).norm() - exact).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn time_frequency_shift_moves_spectrogram() {
    let grid = self_dual(64);
    let f = localized_random(grid, &mut seeded_rng(5), 2, 1.0);
    let g = gaussian(grid, 1.0);
    let (dk, dl) = (6usize, 3usize);
    let z = PhasePoint::new(dk as f64 * grid.dx(), dl as f64 * grid.domega());
    let v = stft(&f, &g).unwrap();
    let vs = stft(&timefreq_shift(&f, z).unwrap(), &g).unwrap();
    for k in 0..64 {
        for l in 0..64 {
            let a = vs.get((k + dk) % 64, (l + dl) % 64).norm();
            assert!((a - v.get(k, l).norm()).abs() < 1e-13);
        }
    }
}

#[test]
fn off_grid_points_agree_with_lattice_and_closed_form() {
    let grid = self_dual(128);
    let g = gaussian(grid, 1.0);
    let pts: Vec<PhasePoint> = [(0.3, -0.7), (1.13, 0.2), (-0.05, 0.55)]
        .iter()
        .map(|&(x, w)| PhasePoint::new(x, w))
        .collect();
    let vals = stft_at_points(&g, &g, &pts, Execution::Sequential).unwrap();
    for (p, v) in pts.iter().zip(&vals) {
        let exact = (-PI * (p.x * p.x + p.omega * p.omega) / 2.0).exp();
        assert!((v.norm() - exact).abs() < 1e-10);
    }
}

#[test]
fn fourier_is_unitary_and_maps_gaussian_to_itself() {
    let grid = self_dual(64);
    let g = gaussian(grid, 1.0);
    let gh = fourier(&g);
    assert!(gh.max_abs_diff(&Signal::new(*gh.grid(), g.samples().to_vec()).unwrap()).unwrap() < 1e-12);
    let f = white_noise(grid, &mut seeded_rng(6));
    assert!((fourier(&f).norm_sq() - f.norm_sq()).abs() < 1e-12);
}

#[test]
fn metaplectic_generators_are_unitary() {
    let grid = self_dual(128);
    let f = localized_random(grid, &mut seeded_rng(7), 2, 1.0);
    for kind in [
        Metaplectic::RotationJ,
        Metaplectic::Dilation { lambda: 1.5 },
        Metaplectic::Chirp { c: 0.5 },
    ] {
        let u = metaplectic_apply(&f, kind).unwrap();
        assert!((u.norm_sq() - 1.0).abs() < 1e-9, "{kind:?}");
    }
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let grid = self_dual(128);
    let mut rng = seeded_rng(10);
    let f = white_noise(grid, &mut rng);
    let g = white_noise(grid, &mut rng);
    let a = stft_with(&f, &g, Execution::Sequential).unwrap();
    let b = stft_with(&f, &g, Execution::Parallel).unwrap();
    assert_eq!(a.values(), b.values());
}
