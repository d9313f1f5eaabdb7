use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::sampler::{EventKind, Trajectory};
use crate::scalar::Scalar;
use crate::targets::Target;

use super::SampleSeries;

/// Mean squared jumping distance per tracked coordinate.
pub fn msjd(series: &SampleSeries) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::Parameter("MSJD needs at least two samples".into()));
    }
    Ok(series
        .values
        .iter()
        .map(|s| s.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (s.len() - 1) as f64)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MsePoint {
    pub sampler_time: f64,
    pub cpu_time: f64,
    pub mse: f64,
}

/// Squared error of the running mean against `truth` (a `d × N` posterior mean),
/// averaged over the tracked coordinates, after each sample.
pub fn mse_vs_time(series: &SampleSeries, truth: &Mat<f64>) -> Result<Vec<MsePoint>> {
    let (d, n) = truth.shape();
    if series.tracked.iter().any(|&(k, c)| k >= d || c >= n) {
        return Err(Error::Shape {
            expected: (d, n),
            got: series
                .tracked
                .iter()
                .fold((0, 0), |m, &(k, c)| (m.0.max(k + 1), m.1.max(c + 1))),
        });
    }
    let m = series.tracked.len() as f64;
    let mut sums = vec![0.0; series.tracked.len()];
    let mut out = Vec::with_capacity(series.len());
    for (j, &t) in series.times.iter().enumerate() {
        let mut err = 0.0;
        for (i, &(k, c)) in series.tracked.iter().enumerate() {
            sums[i] += series.values[i][j];
            err += (sums[i] / (j + 1) as f64 - truth[(k, c)]).powi(2);
        }
        out.push(MsePoint {
            sampler_time: t,
            cpu_time: t * series.wall_per_sampler_second,
            mse: err / m,
        });
    }
    Ok(out)
}

/// `−U(x(t_j))` for every sample; needs every coordinate tracked.
pub fn energy_trace<T: Scalar, M: Target<T> + ?Sized>(target: &M, series: &SampleSeries) -> Result<Vec<f64>> {
    let (d, n) = target.dims();
    let mut slot = vec![usize::MAX; d * n];
    for (i, &(k, c)) in series.tracked.iter().enumerate() {
        if k < d && c < n {
            slot[c * d + k] = i;
        }
    }
    if slot.contains(&usize::MAX) {
        return Err(Error::MissingRecord("all coordinates"));
    }
    let mut x = Mat::<T>::zeros(d, n);
    (0..series.len())
        .map(|j| {
            for (e, &i) in x.as_mut_slice().iter_mut().zip(&slot) {
                *e = T::of(series.values[i][j]);
            }
            Ok(-target.potential(&x)?.as_f64())
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EventStats {
    pub proposals: u64,
    pub bounces: u64,
    pub rejected: u64,
    pub reflections: u64,
    pub refreshes: u64,
    pub expiries: u64,
    /// `bounces / proposals`, 0 without proposals.
    pub acceptance_ratio: f64,
    /// Proposals per lookahead window, `proposals · θ / T`.
    pub events_per_window: f64,
    /// Proposals in each window `[jθ, (j+1)θ)`; empty when recounted from run totals.
    pub window_counts: Vec<u64>,
    /// Time-averaged maximum rate per clock group, when probed.
    pub mean_max_rates: Option<Vec<f64>>,
    /// Counts come from the event log rather than run totals.
    pub from_log: bool,
}

/// Event aggregates, recounted from the event log when one was kept.
pub fn event_stats<T: Scalar>(traj: &Trajectory<T>) -> EventStats {
    let mut s = EventStats::default();
    let logged = !traj.events.is_empty() || traj.stats.proposals + traj.stats.refreshes + traj.stats.expiries == 0;
    if logged {
        let windows = (traj.total_time / traj.theta).ceil().max(1.0) as usize;
        s.window_counts = vec![0; windows];
        for ev in &traj.events {
            match ev.kind {
                EventKind::Bounce => {
                    s.bounces += 1;
                    s.reflections += ev.reflected().len() as u64;
                }
                EventKind::ProposedRejected => s.rejected += 1,
                EventKind::Refresh => s.refreshes += 1,
                EventKind::BoundExpiry => s.expiries += 1,
            }
            if matches!(ev.kind, EventKind::Bounce | EventKind::ProposedRejected) {
                let w = ((ev.time / traj.theta) as usize).min(windows - 1);
                s.window_counts[w] += 1;
            }
        }
        s.proposals = s.bounces + s.rejected;
        s.from_log = true;
    } else {
        let st = &traj.stats;
        s.proposals = st.proposals;
        s.bounces = st.bounces;
        s.rejected = st.proposals - st.bounces;
        s.reflections = st.reflections;
        s.refreshes = st.refreshes;
        s.expiries = st.expiries;
    }
    if s.proposals > 0 {
        s.acceptance_ratio = s.bounces as f64 / s.proposals as f64;
    }
    s.events_per_window = s.proposals as f64 * traj.theta / traj.total_time;
    s.mean_max_rates = traj.samples.as_ref().and_then(|ser| {
        let rows = ser.max_rates.as_ref()?;
        let k = rows.first()?.len();
        Some(
            (0..k)
                .map(|g| rows.iter().map(|r| r[g]).sum::<f64>() / rows.len() as f64)
                .collect(),
        )
    });
    s
}
