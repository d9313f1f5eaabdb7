use std::ops::Range;

use crate::blocking::Block;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::Target;

/// A group of consecutive Markov terms and the variables they touch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub id: usize,
    /// Term (column) indices summed into this factor.
    pub terms: Range<usize>,
    /// All rows over columns `terms.start − 1 .. terms.end` (no previous column for the first factor).
    pub vars: Block,
}

/// Decomposition `U(x) = Σ_F U_F(x_F)` used by the local BPS baseline.
#[derive(Clone, Debug)]
pub struct FactorSet {
    d: usize,
    n: usize,
    factors: Vec<Factor>,
    neighbors: Vec<Vec<usize>>,
}

/// Groups the `N` Markov terms of `target` into factors of `group_width` consecutive terms.
pub fn factorize<T: Scalar, M: Target<T> + ?Sized>(target: &M, group_width: usize) -> Result<FactorSet> {
    if !target.capabilities().has_factors {
        return Err(Error::Capability("factorization"));
    }
    if group_width == 0 {
        return Err(Error::Config("factor group width must be positive".into()));
    }
    let (d, n) = target.dims();
    let factors: Vec<Factor> = (0..n)
        .step_by(group_width)
        .enumerate()
        .map(|(id, start)| {
            let end = (start + group_width).min(n);
            Factor {
                id,
                terms: start..end,
                vars: Block::new(id, 0..d, start.saturating_sub(1)..end),
            }
        })
        .collect();
    let neighbors = factors
        .iter()
        .map(|f| {
            factors
                .iter()
                .filter(|g| f.vars.intersects(&g.vars))
                .map(|g| g.id)
                .collect()
        })
        .collect();
    Ok(FactorSet {
        d,
        n,
        factors,
        neighbors,
    })
}

impl FactorSet {
    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Factors sharing at least one variable with `id`, including itself.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[id]
    }

    pub fn potential<T: Scalar, M: Target<T> + ?Sized>(&self, target: &M, x: &Mat<T>, id: usize) -> Result<T> {
        let mut u = T::zero();
        for c in self.factors[id].terms.clone() {
            u += target.column_term(x, c)?;
        }
        Ok(u)
    }

    /// `∇U_F` over the factor's variables, shaped `d × |vars.cols|`.
    pub fn gradient<T: Scalar, M: Target<T> + ?Sized>(&self, target: &M, x: &Mat<T>, id: usize) -> Result<Mat<T>> {
        let f = &self.factors[id];
        let first = f.vars.cols.start;
        let mut g = Mat::zeros(self.d, f.vars.cols.len());
        let mut prev = vec![T::zero(); self.d];
        let mut cur = vec![T::zero(); self.d];
        for c in f.terms.clone() {
            prev.iter_mut().for_each(|v| *v = T::zero());
            cur.iter_mut().for_each(|v| *v = T::zero());
            target.column_term_gradient(x, c, &mut prev, &mut cur)?;
            super::add_into(g.col_mut(c - first), &cur);
            if c > 0 {
                super::add_into(g.col_mut(c - 1 - first), &prev);
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{ArGaussianModel, IsotropicGaussian};

    #[test]
    fn grouped_factor_count() {
        let y = Mat::<f64>::zeros(3, 1000);
        let m = ArGaussianModel::build(5.0, 0.1, y).unwrap();
        let f = factorize(&m, 20).unwrap();
        assert_eq!(f.len(), 50);
        assert_eq!(f.factors()[1].vars.cols, 19..40);
        assert_eq!(f.neighbors(1), &[0, 1, 2]);
        let single = factorize(&m, 1).unwrap();
        assert_eq!(single.len(), 1000);
        assert_eq!(single.factors()[0].vars.cols, 0..1);
        assert_eq!(single.factors()[5].vars.cols, 4..6);
    }

    #[test]
    fn single_column_single_factor() {
        let t = IsotropicGaussian::new(2, 1);
        let f = factorize::<f64, _>(&t, 1).unwrap();
        let x = Mat::from_fn(2, 1, |k, _| k as f64 + 0.5);
        assert_eq!(f.len(), 1);
        assert_eq!(f.potential(&t, &x, 0).unwrap(), Target::<f64>::potential(&t, &x).unwrap());
    }

    struct Opaque;

    impl Target<f64> for Opaque {
        fn dims(&self) -> (usize, usize) {
            (1, 1)
        }
        fn capabilities(&self) -> crate::targets::Capabilities {
            Default::default()
        }
        fn potential(&self, _x: &Mat<f64>) -> Result<f64> {
            Ok(0.0)
        }
        fn gradient(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
            Ok(x.clone())
        }
    }

    #[test]
    fn unsupported_target() {
        assert!(matches!(factorize(&Opaque, 1), Err(Error::Capability(_))));
    }
}
