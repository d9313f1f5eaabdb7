//! Ground truth for checking the samplers: exact Gaussian posteriors for the AR
//! model, data simulators and finite-difference gradients.
//!
//! The linear algebra here goes through `nalgebra` and is assembled directly
//! from the model parameters, independent of the targets' gradient code.

mod dense;
mod finite_diff;
mod kalman;
mod simulate;

pub use dense::{dense_gaussian_oracle, DenseGaussian, MAX_DENSE_DIM};
pub use finite_diff::{directional_derivative_fd, finite_diff_gradient};
pub use kalman::{kalman_smooth, GaussianPosterior};
pub use simulate::{simulate_ar_data, simulate_sv_data, ArData, SvData};

use nalgebra::DMatrix;

use crate::matrix::Mat;

pub(crate) fn to_na(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.nrows(), m.ncols(), m.as_slice())
}

pub(crate) fn from_na(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("shape matches")
}
