use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::blocking::Block;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::Target;

use super::bounds::Bounder;
use super::flow::Flow;
use super::kernel::{block_dot, reflected_block, write_block};
use super::record::Recorder;
use super::trajectory::{Algorithm, Checkpoint, EventKind, Payload, RunStats, Trajectory};
use super::units::ClockUnits;
use super::{SamplerOptions, VelocityInit};

/// Relative slack before a rate above its bound counts as a violation; absorbs
/// rounding between the bound evaluation and the proposal evaluation.
const VIOLATION_TOL: f64 = 1e-9;

/// Uniform draw keyed by `(event, block)`, independent of evaluation order.
fn keyed_uniform(key: &ChaCha8Rng, event: u64, block: usize) -> f64 {
    let mut r = key.clone();
    r.set_stream(event);
    r.set_word_pos(block as u128 * 2);
    r.random::<f64>()
}

/// Position of `u` in `weights` for a draw `target ∈ [0, Σ weights)`.
fn select(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

fn hull<I: Iterator<Item = std::ops::Range<usize>>>(ranges: I) -> std::ops::Range<usize> {
    ranges.fold(usize::MAX..0, |h, r| h.start.min(r.start)..h.end.max(r.end))
}

pub(crate) struct Engine<'a, T, M: ?Sized, U> {
    algorithm: Algorithm,
    target: &'a M,
    units: &'a U,
    opts: &'a SamplerOptions<T>,
    /// Sub-strategies for the even-odd sampler; a single group of all units otherwise.
    groups: Vec<Vec<usize>>,
    flow: Flow<T>,
    bounder: Bounder<T>,
    bounds: Vec<f64>,
    group_bounds: Vec<f64>,
    rng: ChaCha8Rng,
    key: ChaCha8Rng,
    pool: Option<ThreadPool>,
    rec: Recorder<T>,
    stats: RunStats,
    scratch: Mat<T>,
    t: f64,
    expiry: f64,
    warnings: Vec<String>,
}

impl<'a, T, M, U> Engine<'a, T, M, U>
where
    T: Scalar,
    M: Target<T> + ?Sized,
    U: ClockUnits<T>,
{
    pub fn new(
        algorithm: Algorithm,
        target: &'a M,
        units: &'a U,
        phi: Mat<T>,
        groups: Option<Vec<Vec<usize>>>,
        opts: &'a SamplerOptions<T>,
    ) -> Result<Self> {
        let (d, n) = target.dims();
        phi.expect_shape((d, n))?;
        if !(opts.total_time > 0.0) || !opts.total_time.is_finite() {
            return Err(Error::Config(format!("total time must be positive, got {}", opts.total_time)));
        }
        if !(opts.theta > 0.0) || !opts.theta.is_finite() {
            return Err(Error::Config(format!("lookahead theta must be positive, got {}", opts.theta)));
        }
        if !(opts.refresh_rate >= 0.0) || !opts.refresh_rate.is_finite() {
            return Err(Error::Config(format!("refresh rate must be non-negative, got {}", opts.refresh_rate)));
        }
        if let Some(dt) = opts.recording.sample_interval {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("sample interval must be positive, got {dt}")));
            }
        }
        if let Some(tr) = &opts.recording.tracked {
            if let Some(&(k, c)) = tr.iter().find(|&&(k, c)| k >= d || c >= n) {
                return Err(Error::Config(format!("tracked index ({k}, {c}) outside the {d}x{n} grid")));
            }
        }
        let mut warnings = Vec::new();
        if opts.refresh_rate == 0.0 {
            warnings.push("refresh rate is 0: the process may be reducible".to_string());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let key = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
        let x0 = match &opts.initial_position {
            Some(x) => {
                x.expect_shape((d, n))?;
                x.clone()
            }
            None => Mat::zeros(d, n),
        };
        let v0 = match &opts.velocity_init {
            VelocityInit::Gaussian => Mat::from_fn(d, n, |_, _| T::of(rng.sample(StandardNormal))),
            VelocityInit::Ones => Mat::filled(d, n, T::one()),
            VelocityInit::Given(v) => {
                v.expect_shape((d, n))?;
                v.clone()
            }
        };
        let strategy = opts.bound.resolve(target.capabilities().is_quadratic);
        let pool = if opts.parallelism > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(opts.parallelism)
                    .build()
                    .map_err(|e| Error::Config(format!("worker pool: {e}")))?,
            )
        } else {
            None
        };
        let groups = groups.unwrap_or_else(|| vec![(0..units.len()).collect()]);
        let stats = RunStats {
            bias_risk: strategy.is_monitored(),
            ..RunStats::default()
        };
        Ok(Self {
            algorithm,
            target,
            units,
            opts,
            group_bounds: vec![0.0; groups.len()],
            groups,
            flow: Flow::new(x0, v0, phi, 0.0),
            bounder: Bounder::new(strategy, d, n),
            bounds: vec![0.0; units.len()],
            rng,
            key,
            pool,
            rec: Recorder::new(&opts.recording, d, n, opts.total_time),
            stats,
            scratch: Mat::zeros(d, n),
            t: 0.0,
            expiry: opts.theta,
            warnings,
        })
    }

    pub fn run(mut self) -> Result<Trajectory<T>> {
        let start = Instant::now();
        let x0 = self.flow.x.clone();
        let v0 = self.flow.v.clone();
        if let Err(e) = self.main_loop() {
            return Err(self.abort(e));
        }
        let total = self.opts.total_time;
        self.rec
            .sample_until(total, true, &self.flow, self.target, self.units, &self.groups)
            .map_err(|e| self.abort_ref(e))?;
        self.flow.sync_all(total);
        if !self.flow.x.is_finite() {
            return Err(self.abort(Error::Numerical { term: "position", index: 0 }));
        }
        let wall = start.elapsed().as_secs_f64();
        self.stats.wall_clock_secs = wall;
        self.stats.final_safety = self.bounder.safety();
        if self.stats.violations > 0 && self.stats.bias_risk {
            self.warnings.push(format!(
                "{} bound violations; safety factor escalated to {:.3}",
                self.stats.violations,
                self.bounder.safety()
            ));
        }
        let replayable = self.rec.keeps_payload();
        let supports: Vec<Block> = (0..self.units.len()).map(|u| self.units.support(u).clone()).collect();
        let n_clocks = if self.algorithm == Algorithm::EvenOdd {
            self.groups.len()
        } else {
            self.units.len()
        };
        let (samples, events, checkpoints) = self.rec.into_series(wall, total);
        Ok(Trajectory {
            algorithm: self.algorithm,
            total_time: total,
            theta: self.opts.theta,
            refresh_rate: self.opts.refresh_rate,
            seed: self.opts.seed,
            phi: self.flow.phi,
            supports,
            n_clocks,
            x0,
            v0,
            x_final: self.flow.x,
            v_final: self.flow.v,
            events,
            replayable,
            checkpoints,
            samples,
            stats: self.stats,
            warnings: self.warnings,
        })
    }

    fn abort_ref(&mut self, e: Error) -> Error {
        match e {
            Error::Numerical { .. } => {
                self.flow.sync_all(self.t);
                Error::NonFiniteState {
                    time: self.t,
                    cause: e.to_string(),
                    snapshot: Box::new(Checkpoint::capture(&self.flow, self.rec.events.len(), self.t)),
                }
            }
            other => other,
        }
    }

    fn abort(mut self, e: Error) -> Error {
        self.abort_ref(e)
    }

    fn all_units(&self) -> Vec<usize> {
        (0..self.units.len()).collect()
    }

    fn recompute(&mut self, ids: &[usize], window: f64) -> Result<()> {
        let fresh = self
            .bounder
            .compute(&self.flow, self.units, ids, self.t, window, self.pool.as_ref())?;
        for (&u, b) in ids.iter().zip(fresh) {
            self.bounds[u] = b;
        }
        for (g, members) in self.group_bounds.iter_mut().zip(&self.groups) {
            *g = members.iter().map(|&u| self.bounds[u]).fold(0.0, f64::max);
        }
        Ok(())
    }

    fn even_odd(&self) -> bool {
        self.algorithm == Algorithm::EvenOdd
    }

    fn main_loop(&mut self) -> Result<()> {
        let total = self.opts.total_time;
        let theta = self.opts.theta;
        let gamma = self.opts.refresh_rate;
        let all = self.all_units();
        self.recompute(&all, theta)?;
        loop {
            let clock_rate: f64 = if self.even_odd() {
                self.group_bounds.iter().sum()
            } else {
                self.bounds.iter().sum()
            };
            let tau_b = if clock_rate > 0.0 {
                self.rng.sample::<f64, _>(Exp1) / clock_rate
            } else {
                f64::INFINITY
            };
            let tau_r = if gamma > 0.0 {
                self.rng.sample::<f64, _>(Exp1) / gamma
            } else {
                f64::INFINITY
            };
            let next = self.t + tau_b.min(tau_r);
            if next > self.expiry && self.expiry < total {
                self.t = self.expiry;
                self.expiry += theta;
                self.sample()?;
                self.recompute(&all, theta)?;
                self.stats.expiries += 1;
                self.rec.event(self.t, EventKind::BoundExpiry, None, None, || Payload::None);
                continue;
            }
            if next > total {
                return Ok(());
            }
            self.t = next;
            self.sample()?;
            if tau_b <= tau_r {
                let u = self.rng.random::<f64>() * clock_rate;
                if self.even_odd() {
                    self.bounce_group(u)?;
                } else {
                    self.bounce_single(u)?;
                }
            } else {
                self.refresh()?;
            }
        }
    }

    fn sample(&mut self) -> Result<()> {
        self.rec
            .sample_until(self.t, false, &self.flow, self.target, self.units, &self.groups)
    }

    fn note_violation(&mut self, rate: f64, bound: f64) {
        if rate > bound * (1.0 + VIOLATION_TOL) {
            self.stats.violations += 1;
            self.bounder.escalate();
        }
    }

    fn bounce_single(&mut self, draw: f64) -> Result<()> {
        let t = self.t;
        let pick = select(&self.bounds, draw);
        self.stats.proposals += 1;
        let units = self.units;
        let support = units.support(pick);
        self.flow.fill(&mut self.scratch, units.read_cols(pick), t);
        let g = units.gradient(&self.scratch, pick)?;
        let rate = block_dot(&g, &self.flow.v, support).as_f64();
        if !rate.is_finite() {
            return Err(Error::Numerical { term: "rate", index: pick });
        }
        let rate = rate.max(0.0);
        let bound = self.bounds[pick];
        self.note_violation(rate, bound);
        let accept = self.rng.random::<f64>() < rate / bound;
        let reflected = if accept { reflected_block(&g, &self.flow.v, support) } else { None };
        match reflected {
            Some(vb) => {
                self.flow.sync(support.cols.clone(), t);
                write_block(&mut self.flow.v, support, &vb);
                self.stats.bounces += 1;
                self.stats.reflections += 1;
                self.rec.event(t, EventKind::Bounce, Some(pick), None, || Payload::Blocks(vec![(pick, vb)]));
                self.rec.velocity_changed(&self.flow, t);
                let deps = units.deps(pick).to_vec();
                self.recompute(&deps, self.expiry - t)?;
            }
            None => {
                if accept {
                    self.stats.degenerate += 1;
                }
                self.rec.event(t, EventKind::ProposedRejected, Some(pick), None, || Payload::None);
            }
        }
        Ok(())
    }

    fn bounce_group(&mut self, draw: f64) -> Result<()> {
        let t = self.t;
        let kappa = select(&self.group_bounds, draw);
        let event = self.stats.proposals;
        self.stats.proposals += 1;
        let bound = self.group_bounds[kappa];
        let units = self.units;
        let members = &self.groups[kappa];
        let cols = hull(members.iter().map(|&u| units.read_cols(u)));
        self.flow.fill(&mut self.scratch, cols, t);
        let (scratch, v, key) = (&self.scratch, &self.flow.v, &self.key);
        let decide = |&u: &usize| -> Result<(f64, Option<Vec<T>>)> {
            let support = units.support(u);
            let g = units.gradient(scratch, u)?;
            let rate = block_dot(&g, v, support).as_f64();
            if !rate.is_finite() {
                return Err(Error::Numerical { term: "rate", index: u });
            }
            let rate = rate.max(0.0);
            let accept = keyed_uniform(key, event, u) < rate / bound;
            Ok((rate, if accept { reflected_block(&g, v, support) } else { None }))
        };
        let decisions: Vec<(f64, Option<Vec<T>>)> = match &self.pool {
            Some(p) => p.install(|| members.par_iter().map(decide).collect::<Result<_>>())?,
            None => members.iter().map(decide).collect::<Result<_>>()?,
        };
        let members = members.clone();
        let mut updates = Vec::new();
        for (&u, (rate, vb)) in members.iter().zip(decisions) {
            self.note_violation(rate, bound);
            if let Some(vb) = vb {
                let support = units.support(u);
                self.flow.sync(support.cols.clone(), t);
                write_block(&mut self.flow.v, support, &vb);
                updates.push((u, vb));
            }
        }
        if updates.is_empty() {
            self.rec.event(t, EventKind::ProposedRejected, None, Some(kappa), || Payload::None);
            return Ok(());
        }
        self.stats.bounces += 1;
        self.stats.reflections += updates.len() as u64;
        let mut deps: Vec<usize> = updates.iter().flat_map(|(u, _)| units.deps(*u).iter().copied()).collect();
        deps.sort_unstable();
        deps.dedup();
        self.rec.event(t, EventKind::Bounce, None, Some(kappa), || Payload::Blocks(updates));
        self.rec.velocity_changed(&self.flow, t);
        self.recompute(&deps, self.expiry - t)
    }

    fn refresh(&mut self) -> Result<()> {
        let t = self.t;
        self.flow.sync_all(t);
        for e in self.flow.v.as_mut_slice() {
            *e = T::of(self.rng.sample(StandardNormal));
        }
        self.stats.refreshes += 1;
        let v = &self.flow.v;
        self.rec.event(t, EventKind::Refresh, None, None, || Payload::Full(v.clone()));
        self.rec.velocity_changed(&self.flow, t);
        let all = self.all_units();
        self.recompute(&all, self.expiry - t)
    }
}
