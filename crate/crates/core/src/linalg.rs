//! Small dense routines for the `d × d` parameter matrices of the models.

use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor, or `None` if `a` is not numerically positive definite.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

pub fn is_positive_definite<T: Scalar>(a: &Mat<T>) -> bool {
    is_symmetric(a, T::of(1e-9)) && cholesky(a).is_some()
}

pub fn is_symmetric<T: Scalar>(a: &Mat<T>, tol: T) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * (T::one() + a[(i, j)].abs())))
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
pub fn spd_inverse<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let l = cholesky(a)?;
    let n = a.nrows();
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[c] = T::one();
        let y = forward_sub(&l, &e);
        let x = backward_sub_transposed(&l, &y);
        inv.col_mut(c).copy_from_slice(&x);
    }
    symmetrize(&mut inv);
    Some(inv)
}

/// Solves `L y = b`.
pub fn forward_sub<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Solves `Lᵀ x = y`.
pub fn backward_sub_transposed<T: Scalar>(l: &Mat<T>, y: &[T]) -> Vec<T> {
    let n = y.len();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

pub fn symmetrize<T: Scalar>(a: &mut Mat<T>) {
    let n = a.nrows();
    let half = T::of(0.5);
    for i in 0..n {
        for j in 0..i {
            let m = half * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}
