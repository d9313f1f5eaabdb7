use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::targets::ArGaussianModel;

use super::{from_na, to_na};

/// Largest `dN` the dense oracle will assemble.
pub const MAX_DENSE_DIM: usize = 4096;

/// Joint Gaussian of `vec(x)` (column-major, time-major blocks of `d`):
/// `U(x) = ½ vᵀ P v − bᵀ v + ½‖y‖²_F`.
#[derive(Clone, Debug)]
pub struct DenseGaussian {
    pub d: usize,
    pub n: usize,
    pub precision: DMatrix<f64>,
    pub shift: DVector<f64>,
    y_norm_sq: f64,
}

pub fn dense_gaussian_oracle(model: &ArGaussianModel<f64>) -> Result<DenseGaussian> {
    let y = model.observations();
    let (d, n) = y.shape();
    let dim = d * n;
    if dim > MAX_DENSE_DIM {
        return Err(Error::Config(format!(
            "dense oracle limited to dN <= {MAX_DENSE_DIM}, got {dim}"
        )));
    }
    let a = to_na(model.transition());
    let ata = a.transpose() * &a;
    let identity = DMatrix::<f64>::identity(d, d);
    let initial_cov = &identity + &a * a.transpose();
    let initial_precision = initial_cov
        .cholesky()
        .ok_or_else(|| Error::Parameter("initial covariance not positive definite".into()))?
        .inverse();

    let mut p = DMatrix::<f64>::zeros(dim, dim);
    let at = a.transpose();
    for c in 0..n {
        let s = c * d;
        // observation
        let mut diag = p.view_mut((s, s), (d, d));
        diag += &identity;
        if c == 0 {
            diag += &initial_precision;
        } else {
            // ½|x_c − A x_{c−1}|²
            diag += &identity;
            let sp = s - d;
            let mut prev = p.view_mut((sp, sp), (d, d));
            prev += &ata;
            let mut upper = p.view_mut((sp, s), (d, d));
            upper -= &at;
            let mut lower = p.view_mut((s, sp), (d, d));
            lower -= &a;
        }
    }
    let shift = DVector::from_column_slice(y.as_slice());
    Ok(DenseGaussian {
        d,
        n,
        precision: p,
        shift,
        y_norm_sq: y.frobenius_norm_sq(),
    })
}

impl DenseGaussian {
    pub fn potential(&self, x: &Mat<f64>) -> f64 {
        let v = DVector::from_column_slice(x.as_slice());
        0.5 * v.dot(&(&self.precision * &v)) - self.shift.dot(&v) + 0.5 * self.y_norm_sq
    }

    /// `P v − b` reshaped to `d × N`.
    pub fn gradient(&self, x: &Mat<f64>) -> Mat<f64> {
        let v = DVector::from_column_slice(x.as_slice());
        let g = &self.precision * v - &self.shift;
        Mat::from_col_major(self.d, self.n, g.as_slice().to_vec()).expect("shape")
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.precision
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Parameter("precision not positive definite".into()))
    }

    pub fn mean(&self) -> Result<Mat<f64>> {
        let chol = self
            .precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Parameter("precision not positive definite".into()))?;
        let m = chol.solve(&self.shift);
        Ok(Mat::from_col_major(self.d, self.n, m.as_slice().to_vec())?)
    }

    /// Marginal `d × d` covariance of each column.
    pub fn marginal_covariances(&self) -> Result<Vec<Mat<f64>>> {
        let cov = self.covariance()?;
        Ok((0..self.n)
            .map(|c| from_na(&cov.view((c * self.d, c * self.d), (self.d, self.d)).into_owned()))
            .collect())
    }
}
