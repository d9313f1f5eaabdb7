use crate::blocking::Block;
use crate::error::Result;
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::{finite_or, Capabilities, Target};

/// Standard normal on `d × N` matrices: `U(x) = ½‖x‖²_F`.
#[derive(Clone, Debug)]
pub struct IsotropicGaussian {
    d: usize,
    n: usize,
}

impl IsotropicGaussian {
    pub fn new(d: usize, n: usize) -> Self {
        Self { d, n }
    }
}

impl<T: Scalar> Target<T> for IsotropicGaussian {
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
        x.expect_shape((self.d, self.n))?;
        finite_or(T::of(0.5) * x.frobenius_norm_sq(), "potential", 0)
    }

    fn gradient(&self, x: &Mat<T>) -> Result<Mat<T>> {
        x.expect_shape((self.d, self.n))?;
        Ok(x.clone())
    }

    fn block_gradient(&self, x: &Mat<T>, block: &Block) -> Result<Mat<T>> {
        Ok(crate::blocking::restrict(x, block))
    }

    fn column_halo(&self) -> Option<usize> {
        Some(0)
    }

    fn column_term(&self, x: &Mat<T>, n: usize) -> Result<T> {
        Ok(T::of(0.5) * x.col(n).iter().map(|&v| v * v).sum::<T>())
    }

    fn column_term_gradient(&self, x: &Mat<T>, n: usize, _prev: &mut [T], cur: &mut [T]) -> Result<()> {
        super::add_into(cur, x.col(n));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        let t = IsotropicGaussian::new(2, 3);
        assert_eq!(t.potential(&Mat::<f64>::zeros(2, 3)).unwrap(), 0.0);
        let mut x = Mat::<f64>::zeros(2, 3);
        x[(0, 0)] = 1.0;
        x[(1, 2)] = -1.0;
        assert_eq!(t.potential(&x).unwrap(), 1.0);
        assert_eq!(t.gradient(&x).unwrap(), x);
    }
}
