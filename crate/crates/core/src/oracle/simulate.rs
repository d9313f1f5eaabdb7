use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::matrix::Mat;
use crate::targets::SvParams;

/// Simulated AR(1) dataset.
#[derive(Clone, Debug)]
pub struct ArData {
    pub x_true: Mat<f64>,
    pub y: Mat<f64>,
}

/// Forward simulation of `x_n = A x_{n−1} + η_n`, `y_n = x_n + ε_n` with `x_0 ~ N(0, I)`.
///
/// `noise_scale` multiplies both `η` and `ε`; it is 1 for the model and 0 gives
/// a noise-free path for testing.
pub fn simulate_ar_data(a: &Mat<f64>, n: usize, seed: u64, noise_scale: f64) -> ArData {
    let d = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let mut prev: Vec<f64> = (0..d).map(|_| normal()).collect();
    let mut x_true = Mat::zeros(d, n);
    let mut y = Mat::zeros(d, n);
    for c in 0..n {
        let mean = a.mul_vec(&prev);
        for k in 0..d {
            x_true[(k, c)] = mean[k] + noise_scale * normal();
        }
        for k in 0..d {
            y[(k, c)] = x_true[(k, c)] + noise_scale * normal();
        }
        prev = x_true.col(c).to_vec();
    }
    ArData { x_true, y }
}

/// Simulated stochastic volatility dataset, including the drawn noises.
#[derive(Clone, Debug)]
pub struct SvData {
    pub x_true: Mat<f64>,
    pub y: Mat<f64>,
    pub gamma: Vec<f64>,
    pub eta: Mat<f64>,
    pub eps: Mat<f64>,
}

/// Simulates the stochastic volatility model with an explicit `Σ_ε`.
///
/// `x_1 ~ N(0, P_0)`, `(η_n, ε_n) ~ N(0, Σ̂)`, `γ_n ~ Γ(ν/2, rate ν/2)` unless
/// `unit_gamma`, `y_n = γ_n^{-1/2} Λ_n ε_n`, `x_{n+1} = A x_n + η_n`.
pub fn simulate_sv_data(
    params: &SvParams,
    sigma_eps: &Mat<f64>,
    n: usize,
    seed: u64,
    unit_gamma: bool,
) -> Result<SvData> {
    let d = sigma_eps.nrows();
    let alpha = params.alpha_vec(d)?;
    let sigma_eta = params.sigma_eta(d);
    let sigma_rho = params.sigma_rho(&sigma_eta, sigma_eps)?;
    let joint = Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, true) => sigma_eta[(i, j)],
        (true, false) => sigma_rho[(i, j - d)],
        (false, true) => sigma_rho[(j, i - d)],
        (false, false) => sigma_eps[(i - d, j - d)],
    });
    let joint_chol = cholesky(&joint)
        .ok_or_else(|| Error::Parameter("joint noise covariance is not positive definite".into()))?;
    let p0 = Mat::from_fn(d, d, |i, j| sigma_eta[(i, j)] / (1.0 - alpha[i] * alpha[j]));
    let p0_chol = cholesky(&p0)
        .ok_or_else(|| Error::Parameter("stationary covariance is not positive definite".into()))?;
    let gamma_dist = Gamma::new(params.nu / 2.0, 2.0 / params.nu)
        .map_err(|e| Error::Parameter(format!("gamma mixing distribution: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x_true = Mat::zeros(d, n);
    let mut y = Mat::zeros(d, n);
    let mut eta = Mat::zeros(d, n);
    let mut eps = Mat::zeros(d, n);
    let mut gamma = vec![1.0; n];

    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    x_true.col_mut(0).copy_from_slice(&p0_chol.mul_vec(&z));
    for c in 0..n {
        let z: Vec<f64> = (0..2 * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let noise = joint_chol.mul_vec(&z);
        eta.col_mut(c).copy_from_slice(&noise[..d]);
        eps.col_mut(c).copy_from_slice(&noise[d..]);
        if !unit_gamma {
            gamma[c] = gamma_dist.sample(&mut rng);
        }
        for k in 0..d {
            y[(k, c)] = (x_true[(k, c)] / 2.0).exp() * eps[(k, c)] / gamma[c].sqrt();
        }
        if c + 1 < n {
            for k in 0..d {
                x_true[(k, c + 1)] = alpha[k] * x_true[(k, c)] + eta[(k, c)];
            }
        }
    }
    Ok(SvData {
        x_true,
        y,
        gamma,
        eta,
        eps,
    })
}
