//! Property tests over randomly drawn matrices and scenarios.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use sourcecount::{
    eig_hermitian, enforce_nested_monotonicity, gmdl_estimate, project_truncated_spectrum, rmdl_estimate, rmdl_fit,
    generate_snapshots, sample_covariance, EstimatorConfig, HermitianMatrix, NoiseProfile,
    RngStream, ScenarioConfig, SourceSpec,
};

use common::{complex_gaussian, frob2, orthonormalize, random_psd, rng};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), p in 2usize..=10) {
        let r = random_psd(&mut rng(seed), p);
        let eig = eig_hermitian(&r).unwrap();
        let scale = r.frobenius_norm().max(1e-300);
        prop_assert!((eig.reconstruct() - r.as_matrix()).norm() <= 1e-10 * scale);
        let gram = eig.vectors.adjoint() * &eig.vectors;
        prop_assert!((gram - DMatrix::<Complex64>::identity(p, p)).norm() <= 1e-10);
        prop_assert!((eig.values.iter().sum::<f64>() - r.trace()).abs() <= 1e-10 * scale * p as f64);
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gmdl_ignores_overall_scale(seed in any::<u64>(), p in 2usize..=10, n in 20usize..50_000, exp in -6i32..=6) {
        let mut g = rng(seed);
        let values: Vec<f64> = {
            let mut v: Vec<f64> = (0..p).map(|_| 10f64.powf(g.random_range(-2.0..2.0))).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        let c = 10f64.powi(exp);
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        prop_assert_eq!(gmdl_estimate(&values, n).unwrap().q_hat, gmdl_estimate(&scaled, n).unwrap().q_hat);
    }

    #[test]
    fn nested_likelihoods_never_increase(values in prop::collection::vec(-1e6f64..1e6, 0..12)) {
        let out = enforce_nested_monotonicity(&values);
        prop_assert_eq!(out.len(), values.len());
        prop_assert!(out.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.iter().zip(&values).all(|(o, v)| o <= v));
    }

    #[test]
    fn alternation_keeps_w_zero_sum_and_descends(seed in any::<u64>(), p in 3usize..=8) {
        let r = random_psd(&mut rng(seed), p);
        let scale = r.frobenius_norm().powi(2);
        for q in 0..p {
            let fit = rmdl_fit(&r, q, &EstimatorConfig::default()).unwrap();
            prop_assert!(fit.w_sum_trace.iter().all(|s| s.abs() <= 1e-9 * r.trace()));
            prop_assert!(fit.error_trace.windows(2).all(|e| e[1] <= e[0] + 1e-9 * scale));
            prop_assert!(fit.sigma2 > 0.0);
            let eig = eig_hermitian(&fit.lowrank).unwrap();
            let tol = 1e-9 * r.frobenius_norm();
            prop_assert!(eig.values.iter().all(|&l| l >= -tol));
            prop_assert!(eig.values.iter().filter(|&&l| l > tol).count() <= q);
        }
    }

    #[test]
    fn truncated_projection_beats_model_candidates(seed in any::<u64>(), p in 2usize..=8) {
        let mut g = rng(seed);
        let r = random_psd(&mut g, p);
        let eig = eig_hermitian(&r).unwrap();
        for q in 0..p {
            let proj = project_truncated_spectrum(&r, q, 1e-300).unwrap();
            let best = frob2(r.as_matrix(), proj.lowrank.add_diagonal(&vec![proj.sigma2; p]).as_matrix());
            for _ in 0..50 {
                let frame = orthonormalize(complex_gaussian(&mut g, p, p));
                let tail = g.random_range(0.0..1.5) * eig.values[0];
                let levels: Vec<f64> = (0..q).map(|_| tail + g.random_range(0.0..1.5) * eig.values[0]).collect();
                let candidate = common::structured(&frame, &levels, tail);
                prop_assert!(frob2(r.as_matrix(), &candidate) >= best - 1e-9);
            }
        }
    }
}

#[test]
fn sample_covariance_converges() {
    let cfg = ScenarioConfig::preset("fig4").unwrap();
    let truth = cfg.build_true_covariance().unwrap();
    let runs = 40;
    let close = (0..runs)
        .filter(|&k| {
            let r_hat = sample_covariance(&generate_snapshots(&cfg, 100_000, RngStream::new(0xc0ffee, k)));
            (r_hat.as_matrix() - truth.as_matrix()).norm() <= 0.05 * truth.frobenius_norm()
        })
        .count();
    assert!(close as f64 >= 0.95 * runs as f64, "{close}/{runs}");
}

#[test]
fn generic_subspaces_are_identifiable() {
    let mut g = rng(91);
    let flagged = (0..1000)
        .filter(|_| {
            let basis = orthonormalize(complex_gaussian(&mut g, 8, 2)).columns(0, 2).into_owned();
            !sourcecount::estimators::subspace_flags(&basis, sourcecount::estimators::DEFAULT_IDENTIFIABILITY_TOL).is_empty()
        })
        .count();
    assert_eq!(flagged, 0);
}

#[test]
fn estimators_agree_on_white_noise_scenarios() {
    let mut g = rng(7);
    for k in 0..20 {
        let p = g.random_range(3..=8);
        let cfg = ScenarioConfig {
            p,
            sources: vec![SourceSpec { doa_deg: g.random_range(-40.0..40.0), power: 4.0 }],
            noise: NoiseProfile::homogeneous(p, 1.0),
            distribution: Default::default(),
        };
        let r_hat = sample_covariance(&generate_snapshots(&cfg, 20_000, RngStream::new(5, k)));
        let eig = eig_hermitian(&r_hat).unwrap();
        assert_eq!(gmdl_estimate(&eig.values, 20_000).unwrap().q_hat, 1);
        assert_eq!(rmdl_estimate(&r_hat, 20_000, &EstimatorConfig::default()).unwrap().q_hat(), 1);
    }
}

#[test]
fn hermitian_inputs_are_validated() {
    let mut m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
    m[(0, 1)] = Complex64::new(1.0, 1.0);
    assert!(HermitianMatrix::new(m).is_err());
}
