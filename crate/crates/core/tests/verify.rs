use amblab::gabor::GaborLattice;
use amblab::signal::{gaussian, seeded_rng, white_noise};
use amblab::transform::Metaplectic;
use amblab::verify::{
    check_decoupling, check_frame_bounds, check_linf_attainment, check_nonattainment_timecorr,
    check_radar_correlation, check_symplectic_covariance_with, check_weak_usc_failure, run_suite, SUITES,
};
use amblab::{rasterize, DomainSpec, Error, PhasePoint, Signal, TimeGrid, TimeSet};

#[test]
fn radar_correlation_examples() {
    let r = check_radar_correlation(100, 1).unwrap();
    assert!(r.passed, "{}", r.details);
    assert!(r.get("min_margin").unwrap() > 0.0);
    assert!(r.get("gaussian_neighbor_deviation").unwrap() < 1e-12);
    assert!(r.get("gaussian_second_largest").unwrap() < 1.0);
    assert!(check_radar_correlation(0, 1).is_err());
}

#[test]
fn decoupling_examples() {
    let grid = TimeGrid::new(512, 1.0 / 16.0).unwrap();
    let g = gaussian(grid, 1.0);
    let mask = rasterize(&DomainSpec::centered_ball(3.0), &grid).unwrap();
    let seps = [0.0, 5.0, 10.0, 20.0];
    let two = check_decoupling(&g, &g, &seps, &mask, 2.0).unwrap();
    assert!(two.passed, "{}", two.details);
    assert!(two.get("pythagorean_deviation[D=20]").unwrap() < 0.05);
    let four = check_decoupling(&g, &g, &seps, &mask, 4.0).unwrap();
    assert!(four.passed, "{}", four.details);
    assert!(four.get("lp_over_bound[D=20]").unwrap() <= 1.05);
    let single = check_decoupling(&g, &Signal::zeros(grid), &seps, &mask, 2.0).unwrap();
    for d in seps {
        assert!(single.get(&format!("pythagorean_deviation[D={d}]")).unwrap() < 1e-12);
    }
    assert!(check_decoupling(&g, &g, &[5.0, 2.0], &mask, 2.0).is_err());
}

#[test]
fn weak_usc_examples() {
    let grid = TimeGrid::new(512, 0.075).unwrap();
    let g = gaussian(grid, 1.0);
    let mask = rasterize(&DomainSpec::centered_ball(2.0), &grid).unwrap();
    let shifts = [PhasePoint::new(15.0, 0.0)];
    let r = check_weak_usc_failure(&g, &g, &mask, &shifts).unwrap();
    assert!(r.passed, "{}", r.details);
    assert!(r.get("relative_deviation").unwrap() < 0.05);
    assert!(r.get("excess_over_A_f").unwrap() > 0.0);
    assert!(check_weak_usc_failure(&g, &Signal::zeros(grid), &mask, &shifts).is_err());
    let lone = check_weak_usc_failure(&Signal::zeros(grid), &g, &mask, &shifts).unwrap();
    assert!(lone.get("relative_deviation").unwrap() < 0.05);
}

#[test]
fn timecorr_gaps_and_bound() {
    let r = check_nonattainment_timecorr(&TimeSet::interval(0.0, 1.0), 1.0, &[0.25, 1.0, 2.0, 4.0, 8.0]).unwrap();
    assert!(r.passed, "{}", r.details);
    let v = r.get("value[lambda=0.25]").unwrap();
    assert!(v <= 1.0 + 1e-6);
    for l in [1.0, 2.0, 4.0, 8.0] {
        let v = r.get(&format!("value[lambda={l}]")).unwrap();
        assert!(v < 1.0);
        assert!((v - (1.0 - 1.0 / (4.0 * l))).abs() < 2.0 / 64.0);
    }
}

#[test]
fn linf_dichotomy() {
    let ball = check_linf_attainment(&DomainSpec::centered_ball(1.0), &[1.0]).unwrap();
    assert!(ball.passed);
    assert_eq!(ball.get("value[lambda=1]"), Some(1.0));
    let ann = check_linf_attainment(
        &DomainSpec::annulus(PhasePoint::ORIGIN, 1.0, 2.0),
        &[1.0, 4.0, 16.0, 64.0],
    )
    .unwrap();
    assert!(ann.passed, "{}", ann.details);
    let at4 = ann.get("value[lambda=4]").unwrap();
    assert!((at4 - (-std::f64::consts::PI / 32.0).exp()).abs() < 1e-3);
    let at64 = ann.get("value[lambda=64]").unwrap();
    assert!(at64 < 1.0 && 1.0 - at64 < 1e-2);
    let file = DomainSpec::MaskFile {
        path: "nowhere.csv".into(),
    };
    assert!(matches!(check_linf_attainment(&file, &[1.0]), Err(Error::Unsupported(_))));
}

#[test]
fn covariance_on_gaussian() {
    let grid = TimeGrid::self_dual(256).unwrap();
    let g = gaussian(grid, 1.0);
    let kinds = [
        Metaplectic::RotationJ,
        Metaplectic::Dilation { lambda: 2.0 },
        Metaplectic::Chirp { c: 1.0 },
    ];
    let r = check_symplectic_covariance_with(&g, &kinds, 3.0).unwrap();
    assert!(r.passed, "{}", r.details);
    assert!(r.measured.iter().filter(|m| m.label.starts_with("max_deviation")).all(|m| m.value < 1e-5));
}

#[test]
fn frame_bounds_dense_and_sparse() {
    let grid = TimeGrid::self_dual(256).unwrap();
    let g = gaussian(grid, 1.0);
    let lat = GaborLattice::default_for(&grid);
    let r = check_frame_bounds(&g, &lat, 50, 3).unwrap();
    assert!(r.passed);
    let (a, b) = (r.get("lower_bound").unwrap(), r.get("upper_bound").unwrap());
    assert!(0.0 < a && a <= b && b.is_finite());
    // a * b > 1: report only, never a failure.
    let step = 8.0 * grid.dx();
    let sparse = GaborLattice::new(step, step, None);
    assert!(sparse.density() < 1.0);
    let r = check_frame_bounds(&g, &sparse, 20, 3).unwrap();
    assert!(r.passed);
}

#[test]
fn suite_order_and_errors() {
    let names = vec!["frame_bounds".to_string(), "radar_correlation".to_string()];
    let reports = run_suite(&names, 7).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].name, "frame_bounds");
    assert!(matches!(
        run_suite(&["nosuchsuite".to_string()], 7),
        Err(Error::UnknownSuite(_))
    ));
    assert_eq!(SUITES.len(), 11);
}

#[test]
fn subset_reproduces_full_run_entry() {
    let all = run_suite(&["all".to_string()], 7).unwrap();
    let one = run_suite(&["radar_correlation".to_string()], 7).unwrap();
    let full = all.iter().find(|r| r.name == "radar_correlation").unwrap();
    assert_eq!(serde_json::to_string(full).unwrap(), serde_json::to_string(&one[0]).unwrap());
    assert!(all.iter().all(|r| r.passed), "{}", amblab::verify::summary_table(&all));
}

#[test]
fn random_signals_never_beat_origin() {
    let grid = TimeGrid::self_dual(64).unwrap();
    let mut rng = seeded_rng(5);
    for _ in 0..20 {
        let f = white_noise(grid, &mut rng);
        let a = amblab::transform::ambiguity(&f).unwrap();
        let (k, l) = a.argmax_abs();
        assert_eq!((k, l), a.origin_index());
    }
}
