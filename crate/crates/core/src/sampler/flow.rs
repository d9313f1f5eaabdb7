use std::ops::Range;

use crate::matrix::Mat;
use crate::scalar::Scalar;

/// Position and velocity under the flow `x + s·(φ⋆v)`, advanced lazily per column.
///
/// Column `c` of `x` holds the position at time `tcol[c]`; the velocity of a
/// column may only change after the column is synced to the current time.
/// Replay uses the same type so reconstructed paths are bit-identical to the
/// sampler's own.
#[derive(Clone, Debug)]
pub(crate) struct Flow<T> {
    pub x: Mat<T>,
    pub v: Mat<T>,
    pub phi: Mat<T>,
    pub tcol: Vec<f64>,
}

#[inline(always)]
fn advance<T: Scalar>(x: T, s: T, phi: T, v: T) -> T {
    x + s * (phi * v)
}

impl<T: Scalar> Flow<T> {
    pub fn new(x: Mat<T>, v: Mat<T>, phi: Mat<T>, t: f64) -> Self {
        let n = x.ncols();
        Self {
            x,
            v,
            phi,
            tcol: vec![t; n],
        }
    }

    pub fn from_parts(x: Mat<T>, v: Mat<T>, phi: Mat<T>, tcol: Vec<f64>) -> Self {
        Self { x, v, phi, tcol }
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Moves columns `cols` of `x` forward to time `t`.
    pub fn sync(&mut self, cols: Range<usize>, t: f64) {
        let d = self.x.nrows();
        for c in cols {
            let dt = t - self.tcol[c];
            if dt == 0.0 {
                continue;
            }
            let s = T::of(dt);
            let base = c * d;
            let (x, v, phi) = (self.x.as_mut_slice(), self.v.as_slice(), self.phi.as_slice());
            for i in base..base + d {
                x[i] = advance(x[i], s, phi[i], v[i]);
            }
            self.tcol[c] = t;
        }
    }

    pub fn sync_all(&mut self, t: f64) {
        self.sync(0..self.ncols(), t);
    }

    /// Writes the position at time `t` of columns `cols` into `out`.
    pub fn fill(&self, out: &mut Mat<T>, cols: Range<usize>, t: f64) {
        let d = self.x.nrows();
        let (x, v, phi) = (self.x.as_slice(), self.v.as_slice(), self.phi.as_slice());
        let o = out.as_mut_slice();
        for c in cols {
            let s = T::of(t - self.tcol[c]);
            let base = c * d;
            for i in base..base + d {
                o[i] = advance(x[i], s, phi[i], v[i]);
            }
        }
    }

    pub fn position(&self, t: f64) -> Mat<T> {
        let mut out = self.x.clone();
        self.fill(&mut out, 0..self.ncols(), t);
        out
    }

    #[inline]
    pub fn value(&self, k: usize, c: usize, t: f64) -> T {
        advance(self.x[(k, c)], T::of(t - self.tcol[c]), self.phi[(k, c)], self.v[(k, c)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lazy_columns_agree_with_fill() {
        let x = Mat::from_fn(2, 3, |k, c| (k + c) as f64);
        let v = Mat::from_fn(2, 3, |k, c| k as f64 - c as f64);
        let phi = Mat::from_fn(2, 3, |_, c| if c == 1 { 2.0 } else { 1.0 });
        let mut f = Flow::new(x, v, phi, 0.0);
        f.sync(1..2, 0.5);
        let p = f.position(2.0);
        for k in 0..2 {
            for c in 0..3 {
                assert_eq!(p[(k, c)], f.value(k, c, 2.0));
            }
        }
        assert!((p[(0, 1)] - (1.0 - 2.0 * 2.0)).abs() < 1e-15);
        assert!((p[(1, 2)] - (3.0 - 2.0)).abs() < 1e-15);
    }
}
