mod common;

use bbps_core::blocking::{make_grid_strategy, restrict};
use bbps_core::oracle::{dense_gaussian_oracle, finite_diff_gradient, kalman_smooth, simulate_sv_data};
use bbps_core::targets::{factorize, ArGaussianModel, SvParams, StochVolModel, Target};
use bbps_core::Mat;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_ar(d: usize, n: usize, seed: u64) -> ArGaussianModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma2 = rng.random_range(0.5..10.0);
    let psi = rng.random_range(0.05..2.0);
    let y = random_matrix(d, n, &mut rng);
    ArGaussianModel::build(sigma2, psi, y).unwrap()
}

fn sv_model(d: usize, n: usize, seed: u64) -> StochVolModel<f64> {
    let sigma_eps = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let params = SvParams {
        alpha: vec![0.95],
        sigma_eps: Some(sigma_eps.clone()),
        ..Default::default()
    };
    let data = simulate_sv_data(&params, &sigma_eps, n, seed, false).unwrap();
    StochVolModel::build(
        &SvParams {
            gamma: Some(data.gamma.clone()),
            ..params
        },
        data.y,
    )
    .unwrap()
}

fn relative_gap(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let scale = b.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.max_abs_diff(b) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ar_gradient_matches_finite_differences(d in 1usize..5, n in 1usize..9, seed in any::<u64>()) {
        let m = random_ar(d, n, seed);
        let x = random_matrix(d, n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let fd = finite_diff_gradient(&m, &x, 1e-5).unwrap();
        prop_assert!(relative_gap(&m.gradient(&x).unwrap(), &fd) < 1e-6);
    }

    #[test]
    fn ar_potential_matches_dense_quadratic(d in 1usize..5, n in 1usize..9, seed in any::<u64>()) {
        let m = random_ar(d, n, seed);
        let dense = dense_gaussian_oracle(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let x = random_matrix(d, n, &mut rng);
        let x2 = random_matrix(d, n, &mut rng);
        let du = m.potential(&x).unwrap() - m.potential(&x2).unwrap();
        let dd = dense.potential(&x) - dense.potential(&x2);
        prop_assert!((du - dd).abs() < 1e-9 * (1.0 + du.abs()));
        prop_assert!(relative_gap(&m.gradient(&x).unwrap(), &dense.gradient(&x)) < 1e-10);
    }

    #[test]
    fn sv_gradient_matches_finite_differences(d in 1usize..4, n in 2usize..8, seed in any::<u64>()) {
        let m = sv_model(d, n, seed);
        let x = random_matrix(d, n, &mut ChaCha8Rng::seed_from_u64(seed ^ 3));
        let fd = finite_diff_gradient(&m, &x, 1e-5).unwrap();
        prop_assert!(relative_gap(&m.gradient(&x).unwrap(), &fd) < 1e-5);
    }

    #[test]
    fn block_gradients_restrict_the_full_gradient(seed in any::<u64>(), sw in 1usize..4, tw in 1usize..6) {
        let (d, n) = (3, 10);
        let s = make_grid_strategy(d, n, sw, tw, 0, 0).unwrap();
        let x = random_matrix(d, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let ar = random_ar(d, n, seed);
        let sv = sv_model(d, n, seed);
        let (ga, gs) = (ar.gradient(&x).unwrap(), sv.gradient(&x).unwrap());
        for b in s.blocks() {
            prop_assert!(ar.block_gradient(&x, b).unwrap().max_abs_diff(&restrict(&ga, b)) < 1e-12);
            prop_assert!(sv.block_gradient(&x, b).unwrap().max_abs_diff(&restrict(&gs, b)) < 1e-10);
        }
    }

    #[test]
    fn factors_decompose_the_potential(seed in any::<u64>(), width in 1usize..6) {
        let (d, n) = (2, 11);
        let m = random_ar(d, n, seed);
        let f = factorize(&m, width).unwrap();
        let x = random_matrix(d, n, &mut ChaCha8Rng::seed_from_u64(seed ^ 4));
        let total: f64 = (0..f.len()).map(|i| f.potential(&m, &x, i).unwrap()).sum();
        let u = m.potential(&x).unwrap();
        prop_assert!((total - u).abs() < 1e-10 * (1.0 + u.abs()));
        let mut g = Mat::zeros(d, n);
        for fac in f.factors() {
            let gf = f.gradient(&m, &x, fac.id).unwrap();
            for (j, c) in fac.vars.cols.clone().enumerate() {
                for k in 0..d {
                    g[(k, c)] += gf[(k, j)];
                }
            }
        }
        prop_assert!(g.max_abs_diff(&m.gradient(&x).unwrap()) < 1e-10);
    }
}

#[test]
fn kalman_matches_dense_solve_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..50 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(1..=256 / d);
        let m = random_ar(d, n, i);
        let dense = dense_gaussian_oracle(&m).unwrap();
        let post = kalman_smooth(&m).unwrap();
        let mean = dense.mean().unwrap();
        assert!(post.mean.max_abs_diff(&mean) < 1e-8, "instance {i}: mean");
        for (c, cov) in dense.marginal_covariances().unwrap().iter().enumerate() {
            assert!(post.marginal_cov[c].max_abs_diff(cov) < 1e-8, "instance {i}: covariance at {c}");
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let m = ar_instance(4, 20, 3);
    let m32 = ArGaussianModel::<f32>::from_transition(m.transition().cast(), m.observations().cast()).unwrap();
    let x = random_matrix(4, 20, &mut ChaCha8Rng::seed_from_u64(1));
    let g = m.gradient(&x).unwrap();
    let g32: Mat<f64> = m32.gradient(&x.cast()).unwrap().cast();
    assert!(relative_gap(&g32, &g) < 1e-5);
}
