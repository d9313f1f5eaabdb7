#![allow(dead_code)]

use bbps_core::diagnostics::{batch_means_se, SampleSeries};
use bbps_core::oracle::{kalman_smooth, simulate_ar_data, GaussianPosterior};
use bbps_core::targets::ArGaussianModel;
use bbps_core::Mat;

/// AR model with the kernel transition (σ² = 5, ψ = 0.1) on simulated data.
pub fn ar_instance(d: usize, n: usize, seed: u64) -> ArGaussianModel<f64> {
    let a = ArGaussianModel::<f64>::kernel_transition(d, 5.0, 0.1).unwrap();
    let data = simulate_ar_data(&a, n, seed, 1.0);
    ArGaussianModel::from_transition(a, data.y).unwrap()
}

pub fn posterior(model: &ArGaussianModel<f64>) -> GaussianPosterior {
    kalman_smooth(model).unwrap()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Per-coordinate mismatches of discretized moments against a Gaussian posterior:
/// means beyond `z` batch-means standard errors, variances beyond `rel` relative error.
pub fn moment_failures(series: &SampleSeries, post: &GaussianPosterior, z: f64, rel: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &(k, n)) in series.tracked.iter().enumerate() {
        let s = &series.values[i];
        let (m, se) = (mean(s), batch_means_se(s, 50));
        let truth = post.mean[(k, n)];
        if (m - truth).abs() > z * se {
            out.push(format!("mean ({k},{n}): {m:.4} vs {truth:.4} (se {se:.4})"));
        }
        let (v, tv) = (variance(s), post.variance(k, n));
        if (v / tv - 1.0).abs() > rel {
            out.push(format!("variance ({k},{n}): {v:.4} vs {tv:.4}"));
        }
    }
    out
}

pub fn random_matrix(d: usize, n: usize, rng: &mut impl rand::Rng) -> Mat<f64> {
    Mat::from_fn(d, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}
