//! Blocked bouncy particle samplers.
//!
//! Three event loops share one thinning engine: the blocked BPS (one clock
//! per block, bounds summed), the even-odd blocked BPS (one clock per
//! sub-strategy, bounds maxed, simultaneous per-block updates) and the local
//! BPS over a factor decomposition. Positions move under `x + s·(φ⋆v)` and are
//! advanced lazily column by column, so an event only touches the columns its
//! block gradient reads.

mod bounds;
mod engine;
mod flow;
mod kernel;
mod record;
mod trajectory;
mod tune;
mod units;

pub use bounds::{BoundSet, BoundStrategy};
pub use kernel::{max_rates, rate, reflect};
pub use record::RecordingOptions;
pub use trajectory::{Algorithm, Checkpoint, EventKind, EventRecord, Payload, Replay, RunStats, Trajectory};
pub use tune::{tune_multiplicative, tune_theta, TuneOptions, TuneResult, TUNE_BAND};

use serde::{Deserialize, Serialize};

use crate::blocking::{validate_partition, BlockingStrategy, Partition};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::{FactorSet, Target};

use bounds::Bounder;
use engine::Engine;
use flow::Flow;
use units::{BlockUnits, FactorUnits};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityInit<T> {
    /// Independent standard normal entries.
    #[default]
    Gaussian,
    Ones,
    Given(Mat<T>),
}

#[derive(Clone, Debug)]
pub struct SamplerOptions<T> {
    /// Sampler time horizon `T`.
    pub total_time: f64,
    /// Refreshment rate `γ`.
    pub refresh_rate: f64,
    /// Lookahead `θ` for the rate bounds.
    pub theta: f64,
    pub seed: u64,
    pub bound: BoundStrategy,
    /// Defaults to the zero matrix.
    pub initial_position: Option<Mat<T>>,
    pub velocity_init: VelocityInit<T>,
    /// Worker threads for the even-odd per-block updates; 1 runs inline.
    pub parallelism: usize,
    pub recording: RecordingOptions,
}

impl<T> Default for SamplerOptions<T> {
    fn default() -> Self {
        Self {
            total_time: 100.0,
            refresh_rate: 1.0,
            theta: 0.1,
            seed: 0,
            bound: BoundStrategy::Auto,
            initial_position: None,
            velocity_init: VelocityInit::Gaussian,
            parallelism: 1,
            recording: RecordingOptions::default(),
        }
    }
}

/// A sampler together with its clock structure.
#[derive(Clone, Copy, Debug)]
pub enum SamplerKind<'a> {
    Blocked(&'a BlockingStrategy),
    EvenOdd(&'a BlockingStrategy, &'a Partition),
    Local(&'a FactorSet),
}

impl SamplerKind<'_> {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Self::Blocked(_) => Algorithm::Blocked,
            Self::EvenOdd(..) => Algorithm::EvenOdd,
            Self::Local(_) => Algorithm::Local,
        }
    }
}

fn check_dims<T: Scalar, M: Target<T> + ?Sized>(target: &M, dims: (usize, usize)) -> Result<()> {
    if target.dims() != dims {
        return Err(Error::Shape {
            expected: target.dims(),
            got: dims,
        });
    }
    Ok(())
}

/// Blocked bouncy particle sampler: one thinned clock per block.
pub fn simulate_bbps<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    strategy: &BlockingStrategy,
    opts: &SamplerOptions<T>,
) -> Result<Trajectory<T>> {
    check_dims(target, strategy.dims())?;
    let units = BlockUnits::new(target, strategy);
    Engine::new(Algorithm::Blocked, target, &units, strategy.phi_matrix(), None, opts)?.run()
}

/// Even-odd blocked BPS: one clock per sub-strategy; at an event every block of
/// the ringing sub-strategy reflects independently with probability `λ_B / Λ̄_κ`.
pub fn simulate_eobps<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    strategy: &BlockingStrategy,
    partition: &Partition,
    opts: &SamplerOptions<T>,
) -> Result<Trajectory<T>> {
    check_dims(target, strategy.dims())?;
    if let Err(v) = validate_partition(strategy, partition) {
        return Err(Error::Config(format!(
            "partition violates disjointness: {} violation(s), first {:?}",
            v.len(),
            v[0]
        )));
    }
    let units = BlockUnits::new(target, strategy);
    let groups = partition.sub_strategies().to_vec();
    Engine::new(Algorithm::EvenOdd, target, &units, strategy.phi_matrix(), Some(groups), opts)?.run()
}

/// Local BPS over a factor decomposition, without the `φ` speed-up.
pub fn simulate_local_bps<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    factors: &FactorSet,
    opts: &SamplerOptions<T>,
) -> Result<Trajectory<T>> {
    check_dims(target, factors.dims())?;
    let units = FactorUnits::new(target, factors);
    let (d, n) = factors.dims();
    Engine::new(Algorithm::Local, target, &units, Mat::filled(d, n, T::one()), None, opts)?.run()
}

pub fn simulate<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    kind: SamplerKind<'_>,
    opts: &SamplerOptions<T>,
) -> Result<Trajectory<T>> {
    match kind {
        SamplerKind::Blocked(s) => simulate_bbps(target, s, opts),
        SamplerKind::EvenOdd(s, p) => simulate_eobps(target, s, p, opts),
        SamplerKind::Local(f) => simulate_local_bps(target, f, opts),
    }
}

/// Constant bounds for `blocks` valid on `[0, θ)` from `(x, v)` under the flow of `strategy`.
pub fn local_bounds<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    strategy: &BlockingStrategy,
    x: &Mat<T>,
    v: &Mat<T>,
    theta: f64,
    blocks: &[usize],
    bound: BoundStrategy,
) -> Result<BoundSet> {
    check_dims(target, strategy.dims())?;
    if !(theta > 0.0) {
        return Err(Error::Config(format!("lookahead theta must be positive, got {theta}")));
    }
    let (d, n) = strategy.dims();
    let units = BlockUnits::new(target, strategy);
    let flow = Flow::new(x.clone(), v.clone(), strategy.phi_matrix(), 0.0);
    let mut bounder = Bounder::new(bound.resolve(target.capabilities().is_quadratic), d, n);
    let bounds = bounder.compute(&flow, &units, blocks, 0.0, theta, None)?;
    Ok(BoundSet { bounds, window: theta })
}
