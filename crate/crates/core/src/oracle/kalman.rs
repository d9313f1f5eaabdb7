use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::targets::ArGaussianModel;

use super::{from_na, to_na};

/// Exact posterior `p(x_{1:N} | y_{1:N})` summarised by its mean and per-time marginals.
#[derive(Clone, Debug)]
pub struct GaussianPosterior {
    pub mean: Mat<f64>,
    /// `d × d` marginal covariance of each column.
    pub marginal_cov: Vec<Mat<f64>>,
    /// Full `dN × dN` covariance, when it was computed.
    pub full_cov: Option<Mat<f64>>,
}

impl GaussianPosterior {
    /// Marginal variance of entry `(k, n)`.
    pub fn variance(&self, k: usize, n: usize) -> f64 {
        self.marginal_cov[n][(k, k)]
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn spd_inverse(m: &DMatrix<f64>, what: &str, n: usize) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Parameter(format!("{what} covariance not positive definite at time {}", n + 1)))
}

/// Forward Kalman filter followed by the Rauch–Tung–Striebel backward pass.
pub fn kalman_smooth(model: &ArGaussianModel<f64>) -> Result<GaussianPosterior> {
    let y = model.observations();
    let (d, n) = y.shape();
    let a = to_na(model.transition());
    let identity = DMatrix::<f64>::identity(d, d);

    let mut pred_mean = Vec::with_capacity(n);
    let mut pred_cov = Vec::with_capacity(n);
    let mut filt_mean: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut filt_cov: Vec<DMatrix<f64>> = Vec::with_capacity(n);

    let mut m = DVector::<f64>::zeros(d);
    let mut p = &identity + &a * a.transpose();
    for c in 0..n {
        if c > 0 {
            m = &a * &filt_mean[c - 1];
            p = &a * &filt_cov[c - 1] * a.transpose() + &identity;
            symmetrize(&mut p);
        }
        pred_mean.push(m.clone());
        pred_cov.push(p.clone());
        // H = I, R = I
        let innovation_cov = &p + &identity;
        let s_inv = spd_inverse(&innovation_cov, "innovation", c)?;
        let gain = &p * s_inv;
        let yc = DVector::from_column_slice(y.col(c));
        let mf = &m + &gain * (yc - &m);
        let mut pf = (&identity - &gain) * &p;
        symmetrize(&mut pf);
        filt_mean.push(mf);
        filt_cov.push(pf);
    }

    let mut smooth_mean = filt_mean.clone();
    let mut smooth_cov = filt_cov.clone();
    for c in (0..n.saturating_sub(1)).rev() {
        let pred_inv = spd_inverse(&pred_cov[c + 1], "predicted", c + 1)?;
        let g = &filt_cov[c] * a.transpose() * pred_inv;
        smooth_mean[c] = &filt_mean[c] + &g * (&smooth_mean[c + 1] - &pred_mean[c + 1]);
        let mut ps = &filt_cov[c] + &g * (&smooth_cov[c + 1] - &pred_cov[c + 1]) * g.transpose();
        symmetrize(&mut ps);
        smooth_cov[c] = ps;
    }

    let mut mean = Mat::zeros(d, n);
    for (c, mc) in smooth_mean.iter().enumerate() {
        mean.col_mut(c).copy_from_slice(mc.as_slice());
    }
    Ok(GaussianPosterior {
        mean,
        marginal_cov: smooth_cov.iter().map(from_na).collect(),
        full_cov: None,
    })
}
