use crate::blocking::Block;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::{add_into, finite_or, Capabilities, Target};

/// Linear-Gaussian AR(1) smoothing target
///
/// ```text
/// x_n = A x_{n-1} + η_n,  η_n ~ N(0, I)
/// y_n = x_n + ε_n,        ε_n ~ N(0, I)
/// ```
///
/// with `x_0 ~ N(0, I)` marginalised out, so `x_1 ~ N(0, I + AAᵀ)`.
/// The potential drops all normalising constants:
///
/// ```text
/// U(x) = ½ x_1ᵀ (I + AAᵀ)⁻¹ x_1 + Σ_{n≥2} ½|x_n − A x_{n−1}|² + Σ_n ½|y_n − x_n|²
/// ```
#[derive(Clone, Debug)]
pub struct ArGaussianModel<T> {
    d: usize,
    n: usize,
    a: Mat<T>,
    at_a: Mat<T>,
    initial_precision: Mat<T>,
    y: Mat<T>,
}

/// `kern(i, j) = exp(−|i − j|² / (2σ²))`.
fn kern(i: usize, j: usize, sigma2: f64) -> f64 {
    let diff = i as f64 - j as f64;
    (-diff * diff / (2.0 * sigma2)).exp()
}

impl<T: Scalar> ArGaussianModel<T> {
    /// `A_ij = kern(i, j) / (ψ + Σ_l kern(i, l))`.
    pub fn kernel_transition(d: usize, sigma2: f64, psi: f64) -> Result<Mat<T>> {
        if !(sigma2 > 0.0) || !(psi > 0.0) {
            return Err(Error::Parameter(format!(
                "kernel parameters must be positive (sigma2 = {sigma2}, psi = {psi})"
            )));
        }
        let mut a = Mat::zeros(d, d);
        for i in 0..d {
            let row_sum: f64 = (0..d).map(|l| kern(i, l, sigma2)).sum();
            for j in 0..d {
                a[(i, j)] = T::of(kern(i, j, sigma2) / (psi + row_sum));
            }
        }
        Ok(a)
    }

    /// Model with the kernel transition matrix and observations `y` (`d × N`).
    pub fn build(sigma2: f64, psi: f64, y: Mat<T>) -> Result<Self> {
        let a = Self::kernel_transition(y.nrows(), sigma2, psi)?;
        Self::from_transition(a, y)
    }

    /// Model with an explicit transition matrix.
    pub fn from_transition(a: Mat<T>, y: Mat<T>) -> Result<Self> {
        let (d, n) = y.shape();
        if d == 0 || n == 0 {
            return Err(Error::Parameter("empty observation matrix".into()));
        }
        a.expect_shape((d, d))?;
        if !a.is_finite() || !y.is_finite() {
            return Err(Error::Parameter("non-finite model input".into()));
        }
        let at = a.transpose();
        let at_a = at.matmul(&a);
        let mut p1 = a.matmul(&at);
        for k in 0..d {
            p1[(k, k)] += T::one();
        }
        let initial_precision = spd_inverse(&p1)
            .ok_or_else(|| Error::Parameter("initial covariance is not positive definite".into()))?;
        Ok(Self {
            d,
            n,
            a,
            at_a,
            initial_precision,
            y,
        })
    }

    pub fn transition(&self) -> &Mat<T> {
        &self.a
    }

    /// `(I + AAᵀ)⁻¹`, the prior precision of `x_1`.
    pub fn initial_precision(&self) -> &Mat<T> {
        &self.initial_precision
    }

    pub fn observations(&self) -> &Mat<T> {
        &self.y
    }

    /// Gradient entry `(k, c)`; costs `O(d)`.
    #[inline]
    fn gradient_entry(&self, x: &Mat<T>, k: usize, c: usize) -> T {
        let xc = x.col(c);
        let mut g = xc[k] - self.y[(k, c)];
        if c == 0 {
            g += self.initial_precision.row_dot(k, xc);
        } else {
            g += xc[k] - self.a.row_dot(k, x.col(c - 1));
        }
        if c + 1 < self.n {
            // −(Aᵀ x_{c+1})_k + (AᵀA x_c)_k; column k of A is row k of Aᵀ
            let ak = self.a.col(k);
            let next = x.col(c + 1);
            let at_next: T = ak.iter().zip(next).map(|(&a, &v)| a * v).sum();
            g += self.at_a.row_dot(k, xc) - at_next;
        }
        g
    }
}

impl<T: Scalar> Target<T> for ArGaussianModel<T> {
    fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_factors: true,
            is_quadratic: true,
        }
    }

    fn potential(&self, x: &Mat<T>) -> Result<T> {
        super::markov_potential(self, x)
    }

    fn gradient(&self, x: &Mat<T>) -> Result<Mat<T>> {
        x.expect_shape((self.d, self.n))?;
        let g = Mat::from_fn(self.d, self.n, |k, c| self.gradient_entry(x, k, c));
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::Numerical {
                term: "gradient",
                index: 0,
            })
        }
    }

    fn block_gradient(&self, x: &Mat<T>, block: &Block) -> Result<Mat<T>> {
        let g = Mat::from_fn(block.rows.len(), block.cols.len(), |a, b| {
            self.gradient_entry(x, block.rows.start + a, block.cols.start + b)
        });
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::Numerical {
                term: "gradient",
                index: block.id,
            })
        }
    }

    fn column_halo(&self) -> Option<usize> {
        Some(1)
    }

    fn column_term(&self, x: &Mat<T>, n: usize) -> Result<T> {
        let half = T::of(0.5);
        let xc = x.col(n);
        let mut u = T::zero();
        for k in 0..self.d {
            let r = self.y[(k, n)] - xc[k];
            u += half * r * r;
        }
        if n == 0 {
            for k in 0..self.d {
                u += half * xc[k] * self.initial_precision.row_dot(k, xc);
            }
        } else {
            let prev = x.col(n - 1);
            for k in 0..self.d {
                let r = xc[k] - self.a.row_dot(k, prev);
                u += half * r * r;
            }
        }
        finite_or(u, if n == 0 { "initial" } else { "transition" }, n)
    }

    fn column_term_gradient(&self, x: &Mat<T>, n: usize, prev: &mut [T], cur: &mut [T]) -> Result<()> {
        let xc = x.col(n);
        for k in 0..self.d {
            cur[k] += xc[k] - self.y[(k, n)];
        }
        if n == 0 {
            let px = self.initial_precision.mul_vec(xc);
            add_into(cur, &px);
        } else {
            let xp = x.col(n - 1);
            let resid: Vec<T> = (0..self.d).map(|k| xc[k] - self.a.row_dot(k, xp)).collect();
            add_into(cur, &resid);
            // prev −= Aᵀ r
            for j in 0..self.d {
                let aj = self.a.col(j);
                let s: T = aj.iter().zip(&resid).map(|(&a, &r)| a * r).sum();
                prev[j] -= s;
            }
        }
        Ok(())
    }
}
