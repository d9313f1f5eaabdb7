use std::marker::PhantomData;
use std::ops::Range;

use crate::blocking::{Block, BlockingStrategy};
use crate::error::Result;
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::{FactorSet, Target};

use super::kernel::block_dot;

/// The objects that carry their own event clock: blocks for the blocked
/// samplers, factors for the local BPS.
pub(crate) trait ClockUnits<T: Scalar>: Sync {
    fn len(&self) -> usize;
    /// Velocity entries owned (and reflected) by the unit.
    fn support(&self, u: usize) -> &Block;
    /// Columns read by `gradient`.
    fn read_cols(&self, u: usize) -> Range<usize>;
    /// Units whose rate may change when the velocity of `u` changes.
    fn deps(&self, u: usize) -> &[usize];
    /// Gradient shaped like `support(u)`.
    fn gradient(&self, x: &Mat<T>, u: usize) -> Result<Mat<T>>;

    /// `⟨∇_u U(x), v_u⟩` for each of `ids`.
    fn directional(&self, x: &Mat<T>, v: &Mat<T>, ids: &[usize]) -> Result<Vec<T>> {
        ids.iter()
            .map(|&u| Ok(block_dot(&self.gradient(x, u)?, v, self.support(u))))
            .collect()
    }
}

/// Columns each support's gradient reads, and the resulting dependency lists.
fn dependency_lists(supports: &[&Block], read: &[Range<usize>]) -> Vec<Vec<usize>> {
    supports
        .iter()
        .map(|b| {
            read.iter()
                .enumerate()
                .filter(|(_, r)| r.start < b.cols.end && b.cols.start < r.end)
                .map(|(id, _)| id)
                .collect()
        })
        .collect()
}

pub(crate) struct BlockUnits<'a, T, M: ?Sized> {
    target: &'a M,
    strategy: &'a BlockingStrategy,
    read: Vec<Range<usize>>,
    deps: Vec<Vec<usize>>,
    _scalar: PhantomData<fn() -> T>,
}

impl<'a, T: Scalar, M: Target<T> + ?Sized> BlockUnits<'a, T, M> {
    pub fn new(target: &'a M, strategy: &'a BlockingStrategy) -> Self {
        let (_, n) = strategy.dims();
        let halo = target.column_halo();
        let read: Vec<Range<usize>> = strategy
            .blocks()
            .iter()
            .map(|b| match halo {
                Some(h) => b.cols.start.saturating_sub(h)..(b.cols.end + h).min(n),
                None => 0..n,
            })
            .collect();
        let supports: Vec<&Block> = strategy.blocks().iter().collect();
        let deps = dependency_lists(&supports, &read);
        Self {
            target,
            strategy,
            read,
            deps,
            _scalar: PhantomData,
        }
    }
}

impl<T: Scalar, M: Target<T> + ?Sized> ClockUnits<T> for BlockUnits<'_, T, M> {
    fn len(&self) -> usize {
        self.strategy.len()
    }

    fn support(&self, u: usize) -> &Block {
        self.strategy.block(u)
    }

    fn read_cols(&self, u: usize) -> Range<usize> {
        self.read[u].clone()
    }

    fn deps(&self, u: usize) -> &[usize] {
        &self.deps[u]
    }

    fn gradient(&self, x: &Mat<T>, u: usize) -> Result<Mat<T>> {
        self.target.block_gradient(x, self.strategy.block(u))
    }

    /// Overlapping blocks share gradient columns: when their column hull is
    /// narrower than the blocks put together, one hull gradient serves all.
    fn directional(&self, x: &Mat<T>, v: &Mat<T>, ids: &[usize]) -> Result<Vec<T>> {
        let blocks: Vec<&Block> = ids.iter().map(|&u| self.strategy.block(u)).collect();
        let lo = blocks.iter().map(|b| b.cols.start).min().unwrap_or(0);
        let hi = blocks.iter().map(|b| b.cols.end).max().unwrap_or(0);
        let rows = blocks.iter().map(|b| b.rows.start).min().unwrap_or(0)
            ..blocks.iter().map(|b| b.rows.end).max().unwrap_or(0);
        let total: usize = blocks.iter().map(|b| b.len()).sum();
        if blocks.len() < 2 || rows.len() * (hi - lo) >= total {
            return blocks
                .iter()
                .map(|b| Ok(block_dot(&self.target.block_gradient(x, b)?, v, b)))
                .collect();
        }
        let hull = Block::new(0, rows.clone(), lo..hi);
        let g = self.target.block_gradient(x, &hull)?;
        Ok(blocks
            .iter()
            .map(|b| {
                let mut s = T::zero();
                for c in b.cols.clone() {
                    let gc = &g.col(c - lo)[b.rows.start - rows.start..b.rows.end - rows.start];
                    for (&gi, &vi) in gc.iter().zip(&v.col(c)[b.rows.clone()]) {
                        s += gi * vi;
                    }
                }
                s
            })
            .collect())
    }
}

pub(crate) struct FactorUnits<'a, T, M: ?Sized> {
    target: &'a M,
    factors: &'a FactorSet,
    deps: Vec<Vec<usize>>,
    _scalar: PhantomData<fn() -> T>,
}

impl<'a, T: Scalar, M: Target<T> + ?Sized> FactorUnits<'a, T, M> {
    pub fn new(target: &'a M, factors: &'a FactorSet) -> Self {
        let supports: Vec<&Block> = factors.factors().iter().map(|f| &f.vars).collect();
        let read: Vec<Range<usize>> = supports.iter().map(|b| b.cols.clone()).collect();
        let deps = dependency_lists(&supports, &read);
        Self {
            target,
            factors,
            deps,
            _scalar: PhantomData,
        }
    }
}

impl<T: Scalar, M: Target<T> + ?Sized> ClockUnits<T> for FactorUnits<'_, T, M> {
    fn len(&self) -> usize {
        self.factors.len()
    }

    fn support(&self, u: usize) -> &Block {
        &self.factors.factors()[u].vars
    }

    fn read_cols(&self, u: usize) -> Range<usize> {
        self.factors.factors()[u].vars.cols.clone()
    }

    fn deps(&self, u: usize) -> &[usize] {
        &self.deps[u]
    }

    fn gradient(&self, x: &Mat<T>, u: usize) -> Result<Mat<T>> {
        self.factors.gradient(self.target, x, u)
    }
}
