//! Differentiable targets `π(x) ∝ exp{-U(x)}` over `d × N` latent states.
//!
//! All shipped targets are Markov in time: `U` is a sum of per-column terms
//! where term `n` depends on columns `n − 1` and `n` only. This is what makes
//! block gradients local and factor decompositions available.

mod ar;
mod factor;
mod gaussian;
mod sv;

pub use ar::ArGaussianModel;
pub use factor::{factorize, Factor, FactorSet};
pub use gaussian::IsotropicGaussian;
pub use sv::{empirical_covariance, LeverageSpec, StochVolModel, SvParams};

use crate::blocking::{restrict, Block};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Capabilities {
    /// `column_term` / `column_term_gradient` are implemented.
    pub has_factors: bool,
    /// `U` is quadratic, so directional derivatives are affine along the flow.
    pub is_quadratic: bool,
}

pub trait Target<T: Scalar>: Send + Sync {
    /// `(d, N)`.
    fn dims(&self) -> (usize, usize);

    fn capabilities(&self) -> Capabilities;

    /// `U(x)` up to a target-specific additive constant.
    fn potential(&self, x: &Mat<T>) -> Result<T>;

    /// `∇U(x)` with entry `(k, n) = ∂U/∂x_n^k`.
    fn gradient(&self, x: &Mat<T>) -> Result<Mat<T>>;

    /// `∇_B U(x)`, the restriction of the gradient to `block`.
    fn block_gradient(&self, x: &Mat<T>, block: &Block) -> Result<Mat<T>> {
        Ok(restrict(&self.gradient(x)?, block))
    }

    /// Number of columns on each side of a block that `block_gradient` reads.
    /// `None` means the whole state may be read.
    fn column_halo(&self) -> Option<usize> {
        None
    }

    /// Term `n` of the Markov sum: `f_1(x_1) + g(x_1, y_1)` for the first column,
    /// `f(x_{n-1}, x_n) + g(x_n, y_n)` otherwise.
    fn column_term(&self, _x: &Mat<T>, _n: usize) -> Result<T> {
        Err(Error::Capability("factorization"))
    }

    /// Adds the gradient of term `n` with respect to columns `n − 1` and `n` into
    /// `prev` and `cur`. `prev` is untouched for the first column.
    fn column_term_gradient(&self, _x: &Mat<T>, _n: usize, _prev: &mut [T], _cur: &mut [T]) -> Result<()> {
        Err(Error::Capability("factorization"))
    }
}

/// `∇U` assembled from the per-column terms.
#[cfg(test)]
pub(crate) fn markov_gradient<T: Scalar, M: Target<T> + ?Sized>(model: &M, x: &Mat<T>) -> Result<Mat<T>> {
    let (d, n) = model.dims();
    x.expect_shape((d, n))?;
    let mut g = Mat::zeros(d, n);
    let mut prev = vec![T::zero(); d];
    let mut cur = vec![T::zero(); d];
    for c in 0..n {
        prev.iter_mut().for_each(|v| *v = T::zero());
        cur.iter_mut().for_each(|v| *v = T::zero());
        model.column_term_gradient(x, c, &mut prev, &mut cur)?;
        add_into(g.col_mut(c), &cur);
        if c > 0 {
            add_into(g.col_mut(c - 1), &prev);
        }
    }
    Ok(g)
}

/// `∇_B U` touching only columns `l − 1 ..= m + 1`.
#[cfg(test)]
pub(crate) fn markov_block_gradient<T: Scalar, M: Target<T> + ?Sized>(
    model: &M,
    x: &Mat<T>,
    block: &Block,
) -> Result<Mat<T>> {
    let (d, n) = model.dims();
    let (first, last) = (block.cols.start, block.cols.end);
    let mut out = Mat::zeros(block.rows.len(), block.cols.len());
    let mut prev = vec![T::zero(); d];
    let mut cur = vec![T::zero(); d];
    // each term touches columns c − 1 and c; terms first ..= last cover the block
    for c in first..(last + 1).min(n) {
        prev.iter_mut().for_each(|v| *v = T::zero());
        cur.iter_mut().for_each(|v| *v = T::zero());
        model.column_term_gradient(x, c, &mut prev, &mut cur)?;
        if c < last {
            add_into(out.col_mut(c - first), &cur[block.rows.clone()]);
        }
        if c > first {
            add_into(out.col_mut(c - 1 - first), &prev[block.rows.clone()]);
        }
    }
    Ok(out)
}

pub(crate) fn markov_potential<T: Scalar, M: Target<T> + ?Sized>(model: &M, x: &Mat<T>) -> Result<T> {
    let (d, n) = model.dims();
    x.expect_shape((d, n))?;
    let mut total = T::zero();
    for c in 0..n {
        total += model.column_term(x, c)?;
    }
    Ok(total)
}

#[inline]
pub(crate) fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (a, &b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

pub(crate) fn finite_or<T: Scalar>(v: T, term: &'static str, index: usize) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical { term, index })
    }
}
