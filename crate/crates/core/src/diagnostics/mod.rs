//! Turning trajectories into samples and figures of merit.

mod ess;
mod metrics;
mod report;

pub use ess::{acf, autocovariance, batch_means_se, ess, ess_series, EssEstimate, EssSummary};
pub use metrics::{energy_trace, event_stats, msjd, mse_vs_time, EventStats, MsePoint};
pub use report::{
    compare_report, summarize_run, write_acf_csv, write_compare_csv, write_diagnostics_csv, write_events_csv,
    write_samples_csv, write_trace_csv, CompareRow, DiagnosticRow, RunSummary,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::Trajectory;
use crate::scalar::Scalar;

/// Fraction of samples discarded before MSJD.
pub const MSJD_BURN_IN: f64 = 0.25;
/// Samples discarded before stochastic volatility analyses.
pub const SV_BURN_IN_SAMPLES: usize = 250;

/// Positions recorded on a regular grid of sampler times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSeries {
    /// Grid spacing `Δ` in sampler seconds.
    pub interval: f64,
    pub times: Vec<f64>,
    /// Zero-based `(k, n)` coordinates, one per series.
    pub tracked: Vec<(usize, usize)>,
    /// `values[i][j]`: coordinate `tracked[i]` at `times[j]`.
    pub values: Vec<Vec<f64>>,
    /// `−U(x)` at each sample time.
    pub log_posterior: Option<Vec<f64>>,
    /// Maximum rate per clock group at each sample time.
    pub max_rates: Option<Vec<Vec<f64>>>,
    /// Wall-clock seconds per sampler second of the producing run.
    pub wall_per_sampler_second: f64,
}

impl SampleSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Drops the first `count` samples.
    pub fn skip(&self, count: usize) -> Self {
        let count = count.min(self.len());
        Self {
            interval: self.interval,
            times: self.times[count..].to_vec(),
            tracked: self.tracked.clone(),
            values: self.values.iter().map(|s| s[count..].to_vec()).collect(),
            log_posterior: self.log_posterior.as_ref().map(|s| s[count..].to_vec()),
            max_rates: self.max_rates.as_ref().map(|s| s[count..].to_vec()),
            wall_per_sampler_second: self.wall_per_sampler_second,
        }
    }

    /// Drops the leading `fraction` of samples.
    pub fn burn_in(&self, fraction: f64) -> Self {
        self.skip((self.len() as f64 * fraction).floor() as usize)
    }

    /// Index of coordinate `(k, n)` among the tracked series.
    pub fn position_of(&self, k: usize, n: usize) -> Option<usize> {
        self.tracked.iter().position(|&p| p == (k, n))
    }
}

/// Samples `x(jΔ)` of a recorded trajectory by exact replay of its events.
///
/// Evaluation is right-continuous at event times. With `Δ > T` the single sample
/// `x(0)` is returned.
pub fn discretize<T: Scalar>(
    traj: &Trajectory<T>,
    interval: f64,
    tracked: Option<&[(usize, usize)]>,
) -> Result<SampleSeries> {
    if !(interval > 0.0) {
        return Err(Error::Config(format!("sample interval must be positive, got {interval}")));
    }
    let (d, n) = traj.dims();
    let tracked: Vec<(usize, usize)> = match tracked {
        Some(t) => t.to_vec(),
        None => (0..n).flat_map(|c| (0..d).map(move |k| (k, c))).collect(),
    };
    if let Some(&(k, c)) = tracked.iter().find(|&&(k, c)| k >= d || c >= n) {
        return Err(Error::Config(format!("tracked index ({k}, {c}) outside the {d}x{n} grid")));
    }
    let count = if interval > traj.total_time {
        1
    } else {
        (traj.total_time / interval * (1.0 + 1e-12)).floor() as usize + 1
    };
    let mut replay = traj.replay()?;
    let mut times = Vec::with_capacity(count);
    let mut values = vec![Vec::with_capacity(count); tracked.len()];
    for j in 0..count {
        let t = j as f64 * interval;
        replay.advance_to(t);
        for (s, &(k, c)) in values.iter_mut().zip(&tracked) {
            s.push(replay.value(k, c, t).as_f64());
        }
        times.push(t);
    }
    Ok(SampleSeries {
        interval,
        times,
        tracked,
        values,
        log_posterior: None,
        max_rates: None,
        wall_per_sampler_second: traj.stats.wall_clock_secs / traj.total_time,
    })
}
