//! Rectangular blocking strategies over the `d × N` index grid.
//!
//! Blocks are stored with zero-based half-open row (spatial) and column
//! (temporal) ranges. The JSON form uses one-based inclusive bounds `i:j × l:m`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub id: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Block {
    pub fn new(id: usize, rows: Range<usize>, cols: Range<usize>) -> Self {
        Self { id, rows, cols }
    }

    /// Block `i:j × l:m` in one-based inclusive notation.
    pub fn from_inclusive(id: usize, i: usize, j: usize, l: usize, m: usize) -> Result<Self> {
        if i == 0 || l == 0 || i > j || l > m {
            return Err(Error::Config(format!("invalid block {i}:{j} x {l}:{m}")));
        }
        Ok(Self::new(id, i - 1..j, l - 1..m))
    }

    /// `(|i:j|, |l:m|)`.
    pub fn size(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn len(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Zero-based membership test.
    #[inline]
    pub fn contains(&self, k: usize, n: usize) -> bool {
        self.rows.contains(&k) && self.cols.contains(&n)
    }

    pub fn intersects(&self, other: &Block) -> bool {
        self.rows.start < other.rows.end
            && other.rows.start < self.rows.end
            && self.cols.start < other.cols.end
            && other.cols.start < self.cols.end
    }

    pub fn full(d: usize, n: usize) -> Self {
        Self::new(0, 0..d, 0..n)
    }
}

/// Restriction `x_B` of a `d × N` matrix to a block.
pub fn restrict<T: Scalar>(m: &Mat<T>, block: &Block) -> Mat<T> {
    Mat::from_fn(block.rows.len(), block.cols.len(), |a, b| {
        m[(block.rows.start + a, block.cols.start + b)]
    })
}

/// Writes `sub` into the block `block` of `m`.
pub fn embed<T: Scalar>(m: &mut Mat<T>, block: &Block, sub: &Mat<T>) {
    for b in 0..block.cols.len() {
        let col = m.col_mut(block.cols.start + b);
        col[block.rows.clone()].copy_from_slice(sub.col(b));
    }
}

/// Layout of a strategy produced on a regular grid: `spatial × temporal` blocks in
/// row-major (temporal fastest) id order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridLayout {
    pub spatial: usize,
    pub temporal: usize,
}

#[derive(Clone, Debug)]
pub struct BlockingStrategy {
    d: usize,
    n: usize,
    blocks: Vec<Block>,
    phi: Vec<u32>,
    neighbors: Vec<Vec<usize>>,
    layout: Option<GridLayout>,
}

impl BlockingStrategy {
    /// Builds a strategy from explicit blocks. Ids are reassigned to list positions.
    pub fn from_blocks(d: usize, n: usize, blocks: Vec<Block>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::Config("grid must be non-empty".into()));
        }
        if blocks.is_empty() {
            return Err(Error::Config("strategy has no blocks".into()));
        }
        let blocks: Vec<Block> = blocks
            .into_iter()
            .enumerate()
            .map(|(id, b)| Block { id, ..b })
            .collect();
        for b in &blocks {
            if b.is_empty() || b.rows.end > d || b.cols.end > n {
                return Err(Error::Config(format!(
                    "block {} ({:?} x {:?}) outside the {d}x{n} grid",
                    b.id, b.rows, b.cols
                )));
            }
        }
        let mut phi = vec![0u32; d * n];
        for b in &blocks {
            for c in b.cols.clone() {
                for r in b.rows.clone() {
                    phi[c * d + r] += 1;
                }
            }
        }
        if let Some(pos) = phi.iter().position(|&p| p == 0) {
            return Err(Error::Config(format!(
                "blocks do not cover index ({}, {})",
                pos % d + 1,
                pos / d + 1
            )));
        }
        let neighbors = blocks
            .iter()
            .map(|b| {
                blocks
                    .iter()
                    .filter(|o| b.intersects(o))
                    .map(|o| o.id)
                    .collect()
            })
            .collect();
        let layout = infer_layout(&blocks);
        Ok(Self {
            d,
            n,
            blocks,
            phi,
            neighbors,
            layout,
        })
    }

    /// The single block `1:d × 1:N`; the samplers reduce to the standard BPS.
    pub fn single_block(d: usize, n: usize) -> Result<Self> {
        Self::from_blocks(d, n, vec![Block::full(d, n)])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d, self.n)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, id: usize) -> &Block {
        &self.blocks[id]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Multiplicity `φ[k, n]`: the number of blocks containing `(k, n)` (zero-based).
    #[inline]
    pub fn phi(&self, k: usize, n: usize) -> u32 {
        self.phi[n * self.d + k]
    }

    pub fn phi_matrix<T: Scalar>(&self) -> Mat<T> {
        Mat::from_fn(self.d, self.n, |k, n| T::of(f64::from(self.phi(k, n))))
    }

    /// `N(B)`: blocks intersecting `B`, including `B` itself.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[id]
    }

    pub fn layout(&self) -> Option<GridLayout> {
        self.layout
    }

    /// A strategy is temporal when every block spans all spatial rows.
    pub fn is_temporal(&self) -> bool {
        self.blocks.iter().all(|b| b.rows == (0..self.d))
    }
}

fn infer_layout(blocks: &[Block]) -> Option<GridLayout> {
    let first_rows = blocks[0].rows.clone();
    let temporal = blocks.iter().take_while(|b| b.rows == first_rows).count();
    if blocks.len() % temporal != 0 {
        return None;
    }
    let spatial = blocks.len() / temporal;
    for s in 0..spatial {
        let row = &blocks[s * temporal..(s + 1) * temporal];
        if row.iter().any(|b| b.rows != row[0].rows) {
            return None;
        }
        if row
            .iter()
            .zip(&blocks[..temporal])
            .any(|(b, first)| b.cols != first.cols)
        {
            return None;
        }
    }
    Some(GridLayout { spatial, temporal })
}

/// Start offsets of blocks of `width` placed at stride `width − overlap` from 0;
/// the final block is clamped so it ends at `extent`.
fn axis_starts(extent: usize, width: usize, overlap: usize) -> Vec<usize> {
    let stride = width - overlap;
    let mut starts: Vec<usize> = (0..=(extent - width) / stride).map(|k| k * stride).collect();
    let last = *starts.last().expect("at least one block");
    if last + width < extent {
        starts.push(extent - width);
    }
    starts
}

/// Regular spatiotemporal grid strategy.
pub fn make_grid_strategy(
    d: usize,
    n: usize,
    spatial_width: usize,
    temporal_width: usize,
    spatial_overlap: usize,
    temporal_overlap: usize,
) -> Result<BlockingStrategy> {
    for (axis, extent, width, overlap) in [
        ("spatial", d, spatial_width, spatial_overlap),
        ("temporal", n, temporal_width, temporal_overlap),
    ] {
        if width == 0 || width > extent {
            return Err(Error::Config(format!(
                "{axis} width {width} must be in 1..={extent}"
            )));
        }
        if overlap >= width {
            return Err(Error::Config(format!(
                "{axis} overlap {overlap} must be smaller than the width {width}"
            )));
        }
    }
    let rows = axis_starts(d, spatial_width, spatial_overlap);
    let cols = axis_starts(n, temporal_width, temporal_overlap);
    let mut blocks = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            blocks.push(Block::new(
                blocks.len(),
                r..r + spatial_width,
                c..c + temporal_width,
            ));
        }
    }
    let mut strategy = BlockingStrategy::from_blocks(d, n, blocks)?;
    strategy.layout = Some(GridLayout {
        spatial: rows.len(),
        temporal: cols.len(),
    });
    Ok(strategy)
}

/// A split of the blocks into sub-strategies of pairwise disjoint blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    sub_strategies: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(sub_strategies: Vec<Vec<usize>>) -> Self {
        Self { sub_strategies }
    }

    pub fn sub_strategies(&self) -> &[Vec<usize>] {
        &self.sub_strategies
    }

    pub fn len(&self) -> usize {
        self.sub_strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_strategies.is_empty()
    }

    /// Every block in a single sub-strategy. Valid only for pairwise disjoint blocks.
    pub fn trivial(strategy: &BlockingStrategy) -> Self {
        Self::new(vec![(0..strategy.len()).collect()])
    }
}

/// A pair of intersecting blocks placed in the same sub-strategy, or a coverage defect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Overlap { sub: usize, a: usize, b: usize },
    Missing(usize),
    Duplicate(usize),
    UnknownBlock(usize),
}

pub fn validate_partition(
    strategy: &BlockingStrategy,
    partition: &Partition,
) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut seen = vec![0usize; strategy.len()];
    for (s, sub) in partition.sub_strategies().iter().enumerate() {
        for (pos, &a) in sub.iter().enumerate() {
            if a >= strategy.len() {
                violations.push(Violation::UnknownBlock(a));
                continue;
            }
            seen[a] += 1;
            for &b in &sub[pos + 1..] {
                if b < strategy.len() && (a == b || strategy.block(a).intersects(strategy.block(b)))
                {
                    violations.push(Violation::Overlap { sub: s, a, b });
                }
            }
        }
    }
    for (id, &count) in seen.iter().enumerate() {
        match count {
            0 => violations.push(Violation::Missing(id)),
            1 => {}
            _ => violations.push(Violation::Duplicate(id)),
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Parity partition: `K = 2` sub-strategies for a temporal strategy, `K = 4`
/// (spatial parity × temporal parity) for a spatiotemporal grid.
pub fn even_odd_partition(strategy: &BlockingStrategy) -> Result<Partition> {
    if strategy.len() == 1 {
        return Ok(Partition::trivial(strategy));
    }
    let layout = strategy.layout().ok_or_else(|| {
        Error::Config("parity partition needs a grid-ordered strategy".into())
    })?;
    let spatial_k = if layout.spatial > 1 { 2 } else { 1 };
    let temporal_k = if layout.temporal > 1 { 2 } else { 1 };
    let mut subs = vec![Vec::new(); spatial_k * temporal_k];
    for id in 0..strategy.len() {
        let (s, t) = (id / layout.temporal, id % layout.temporal);
        subs[(s % spatial_k) * temporal_k + t % temporal_k].push(id);
    }
    let partition = Partition::new(subs);
    match validate_partition(strategy, &partition) {
        Ok(()) => Ok(partition),
        Err(v) => Err(Error::Config(format!(
            "no parity partition: {} intersecting pairs within a sub-strategy (first {:?}); \
             reduce the overlap below half the block width or use a greedy partition with larger K",
            v.len(),
            v[0]
        ))),
    }
}

/// First-fit colouring of the intersection graph in id order.
pub fn greedy_partition(strategy: &BlockingStrategy) -> Partition {
    let mut subs: Vec<Vec<usize>> = Vec::new();
    let mut colour = vec![usize::MAX; strategy.len()];
    for id in 0..strategy.len() {
        let taken: Vec<usize> = strategy
            .neighbors(id)
            .iter()
            .filter(|&&nb| nb != id && colour[nb] != usize::MAX)
            .map(|&nb| colour[nb])
            .collect();
        let c = (0..).find(|c| !taken.contains(c)).expect("unbounded search");
        if c == subs.len() {
            subs.push(Vec::new());
        }
        subs[c].push(id);
        colour[id] = c;
    }
    Partition::new(subs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub m: usize,
}

/// JSON form `{d, N, blocks: [{i, j, l, m}], partition: [[ids]]}` with one-based
/// inclusive block bounds and zero-based block ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub blocks: Vec<BlockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
}

impl StrategyFile {
    pub fn from_strategy(strategy: &BlockingStrategy, partition: Option<&Partition>) -> Self {
        let (d, n) = strategy.dims();
        Self {
            d,
            n,
            blocks: strategy
                .blocks()
                .iter()
                .map(|b| BlockSpec {
                    i: b.rows.start + 1,
                    j: b.rows.end,
                    l: b.cols.start + 1,
                    m: b.cols.end,
                })
                .collect(),
            partition: partition.map(|p| p.sub_strategies().to_vec()),
        }
    }

    pub fn build(&self) -> Result<(BlockingStrategy, Option<Partition>)> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(id, b)| Block::from_inclusive(id, b.i, b.j, b.l, b.m))
            .collect::<Result<Vec<_>>>()?;
        let strategy = BlockingStrategy::from_blocks(self.d, self.n, blocks)?;
        let partition = match &self.partition {
            None => None,
            Some(p) => {
                let p = Partition::new(p.clone());
                validate_partition(&strategy, &p).map_err(|v| {
                    Error::Config(format!("partition violates disjointness: {v:?}"))
                })?;
                Some(p)
            }
        };
        Ok((strategy, partition))
    }
}
