use crate::blocking::{Block, BlockingStrategy, Partition};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::Target;

/// `⟨g, v_B⟩_F` for a gradient `g` shaped like `block`.
#[inline]
pub(crate) fn block_dot<T: Scalar>(g: &Mat<T>, v: &Mat<T>, block: &Block) -> T {
    let mut s = T::zero();
    for (b, c) in block.cols.clone().enumerate() {
        let vc = &v.col(c)[block.rows.clone()];
        for (&gi, &vi) in g.col(b).iter().zip(vc) {
            s += gi * vi;
        }
    }
    s
}

/// Reflected block velocity in column-major order, or `None` when `g = 0`.
pub(crate) fn reflected_block<T: Scalar>(g: &Mat<T>, v: &Mat<T>, block: &Block) -> Option<Vec<T>> {
    let norm_sq = g.frobenius_norm_sq();
    if norm_sq == T::zero() {
        return None;
    }
    let coef = T::of(2.0) * block_dot(g, v, block) / norm_sq;
    let mut out = Vec::with_capacity(block.len());
    for (b, c) in block.cols.clone().enumerate() {
        let vc = &v.col(c)[block.rows.clone()];
        out.extend(g.col(b).iter().zip(vc).map(|(&gi, &vi)| vi - coef * gi));
    }
    Some(out)
}

/// Writes a column-major block velocity into `v`.
pub(crate) fn write_block<T: Scalar>(v: &mut Mat<T>, block: &Block, values: &[T]) {
    let h = block.rows.len();
    for (b, c) in block.cols.clone().enumerate() {
        v.col_mut(c)[block.rows.clone()].copy_from_slice(&values[b * h..(b + 1) * h]);
    }
}

/// `λ_B(x, v) = max(0, ⟨∇_B U(x), v_B⟩_F)`.
pub fn rate<T: Scalar, M: Target<T> + ?Sized>(target: &M, block: &Block, x: &Mat<T>, v: &Mat<T>) -> Result<T> {
    let g = target.block_gradient(x, block)?;
    Ok(block_dot(&g, v, block).max(T::zero()))
}

/// Velocity after reflecting `v_B` in the hyperplane orthogonal to `∇_B U(x)`;
/// entries outside the block are unchanged.
pub fn reflect<T: Scalar, M: Target<T> + ?Sized>(target: &M, block: &Block, x: &Mat<T>, v: &Mat<T>) -> Result<Mat<T>> {
    let g = target.block_gradient(x, block)?;
    let vb = reflected_block(&g, v, block).ok_or(Error::DegenerateReflection(block.id))?;
    let mut out = v.clone();
    write_block(&mut out, block, &vb);
    Ok(out)
}

/// `Λ̂_κ = max_{B ∈ B̄_κ} λ_B(x, v)` for every sub-strategy.
pub fn max_rates<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    strategy: &BlockingStrategy,
    partition: &Partition,
    x: &Mat<T>,
    v: &Mat<T>,
) -> Result<Vec<T>> {
    partition
        .sub_strategies()
        .iter()
        .map(|sub| {
            sub.iter().try_fold(T::zero(), |m, &id| Ok(m.max(rate(target, strategy.block(id), x, v)?)))
        })
        .collect()
}
