use serde::{Deserialize, Serialize};

use crate::diagnostics::SampleSeries;
use crate::error::Result;
use crate::matrix::Mat;
use crate::scalar::Scalar;
use crate::targets::Target;

use super::flow::Flow;
use super::kernel::block_dot;
use super::trajectory::{Checkpoint, EventKind, EventRecord, Payload};
use super::units::ClockUnits;

/// What a simulation keeps besides its final state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordingOptions {
    /// Keep the event log.
    pub events: bool,
    /// Keep velocity changes in the log so the path can be replayed exactly.
    pub velocities: bool,
    /// Checkpoint after every this many velocity-changing events; 0 disables.
    pub checkpoint_every: usize,
    /// Record positions online every `sample_interval` sampler seconds.
    pub sample_interval: Option<f64>,
    /// Zero-based `(k, n)` coordinates to record; `None` records all, column-major.
    pub tracked: Option<Vec<(usize, usize)>>,
    /// Record `−U(x)` at sample times.
    pub log_posterior: bool,
    /// Record the per-clock maximum rate `Λ̂` at sample times.
    pub max_rates: bool,
}

impl Default for RecordingOptions {
    fn default() -> Self {
        Self {
            events: true,
            velocities: true,
            checkpoint_every: 1000,
            sample_interval: None,
            tracked: None,
            log_posterior: false,
            max_rates: false,
        }
    }
}

impl RecordingOptions {
    /// Online samples only; no event log.
    pub fn samples_only(interval: f64) -> Self {
        Self {
            events: false,
            velocities: false,
            checkpoint_every: 0,
            sample_interval: Some(interval),
            ..Self::default()
        }
    }
}

pub(crate) struct Recorder<T> {
    opts: RecordingOptions,
    n_grid: usize,
    next: usize,
    tracked: Vec<(usize, usize)>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    log_post: Vec<f64>,
    max_rates: Vec<Vec<f64>>,
    scratch: Mat<T>,
    pub events: Vec<EventRecord<T>>,
    pub checkpoints: Vec<Checkpoint>,
    velocity_changes: usize,
}

impl<T: Scalar> Recorder<T> {
    pub fn new(opts: &RecordingOptions, d: usize, n: usize, total_time: f64) -> Self {
        let n_grid = match opts.sample_interval {
            Some(dt) if dt > total_time => 1,
            Some(dt) => (total_time / dt * (1.0 + 1e-12)).floor() as usize + 1,
            None => 0,
        };
        let tracked = opts
            .tracked
            .clone()
            .unwrap_or_else(|| (0..n).flat_map(|c| (0..d).map(move |k| (k, c))).collect());
        Self {
            opts: opts.clone(),
            n_grid,
            next: 0,
            values: vec![Vec::with_capacity(n_grid); tracked.len()],
            tracked,
            times: Vec::with_capacity(n_grid),
            log_post: Vec::new(),
            max_rates: Vec::new(),
            scratch: Mat::zeros(d, n),
            events: Vec::new(),
            checkpoints: Vec::new(),
            velocity_changes: 0,
        }
    }

    pub fn keeps_payload(&self) -> bool {
        self.opts.events && self.opts.velocities
    }

    /// Emits grid samples up to `t` (all remaining ones when `last`). Must be
    /// called before any velocity change at time `t`.
    pub fn sample_until<M, U>(
        &mut self,
        t: f64,
        last: bool,
        flow: &Flow<T>,
        target: &M,
        units: &U,
        groups: &[Vec<usize>],
    ) -> Result<()>
    where
        M: Target<T> + ?Sized,
        U: ClockUnits<T>,
    {
        let Some(dt) = self.opts.sample_interval else {
            return Ok(());
        };
        while self.next < self.n_grid {
            let tk = self.next as f64 * dt;
            if !last && tk > t {
                break;
            }
            for (series, &(k, c)) in self.values.iter_mut().zip(&self.tracked) {
                series.push(flow.value(k, c, tk).as_f64());
            }
            if self.opts.log_posterior || self.opts.max_rates {
                flow.fill(&mut self.scratch, 0..flow.ncols(), tk);
            }
            if self.opts.log_posterior {
                self.log_post.push(-target.potential(&self.scratch)?.as_f64());
            }
            if self.opts.max_rates {
                let mut row = Vec::with_capacity(groups.len());
                for g in groups {
                    let mut m = 0.0f64;
                    for &u in g {
                        let grad = units.gradient(&self.scratch, u)?;
                        m = m.max(block_dot(&grad, &flow.v, units.support(u)).as_f64());
                    }
                    row.push(m);
                }
                self.max_rates.push(row);
            }
            self.times.push(tk);
            self.next += 1;
        }
        Ok(())
    }

    pub fn event(&mut self, time: f64, kind: EventKind, block: Option<usize>, clock: Option<usize>, payload: impl FnOnce() -> Payload<T>) {
        if !self.opts.events {
            return;
        }
        let payload = if self.opts.velocities { payload() } else { Payload::None };
        self.events.push(EventRecord {
            time,
            kind,
            block,
            clock,
            payload,
        });
    }

    /// Bookkeeping after the velocity change just logged.
    pub fn velocity_changed(&mut self, flow: &Flow<T>, time: f64) {
        self.velocity_changes += 1;
        let every = self.opts.checkpoint_every;
        if every > 0 && self.keeps_payload() && self.velocity_changes % every == 0 {
            self.checkpoints.push(Checkpoint::capture(flow, self.events.len(), time));
        }
    }

    pub fn into_series(self, wall_clock_secs: f64, total_time: f64) -> (Option<SampleSeries>, Vec<EventRecord<T>>, Vec<Checkpoint>) {
        let series = self.opts.sample_interval.map(|dt| SampleSeries {
            interval: dt,
            times: self.times,
            tracked: self.tracked,
            values: self.values,
            log_posterior: self.opts.log_posterior.then_some(self.log_post),
            max_rates: self.opts.max_rates.then_some(self.max_rates),
            wall_per_sampler_second: wall_clock_secs / total_time,
        });
        (series, self.events, self.checkpoints)
    }
}
