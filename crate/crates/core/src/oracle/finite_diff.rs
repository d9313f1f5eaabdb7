use crate::error::Result;
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::Target;

/// Central differences `(U(x + h e_kn) − U(x − h e_kn)) / 2h` for every entry.
pub fn finite_diff_gradient<T: Scalar, M: Target<T> + ?Sized>(target: &M, x: &Mat<T>, h: f64) -> Result<Mat<T>> {
    assert!(h > 0.0, "step must be positive");
    let step = T::of(h);
    let mut probe = x.clone();
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    for c in 0..x.ncols() {
        for k in 0..x.nrows() {
            let orig = probe[(k, c)];
            probe[(k, c)] = orig + step;
            let up = target.potential(&probe)?;
            probe[(k, c)] = orig - step;
            let down = target.potential(&probe)?;
            probe[(k, c)] = orig;
            out[(k, c)] = (up - down) / (step + step);
        }
    }
    Ok(out)
}

/// Central-difference derivative of `s ↦ U(x + s w)` at `s = 0`.
pub fn directional_derivative_fd<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    x: &Mat<T>,
    w: &Mat<T>,
    h: f64,
) -> Result<T> {
    let mut up = x.clone();
    up.axpy(T::of(h), w);
    let mut down = x.clone();
    down.axpy(T::of(-h), w);
    Ok((target.potential(&up)? - target.potential(&down)?) / T::of(2.0 * h))
}
