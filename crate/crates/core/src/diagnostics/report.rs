use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Algorithm, EventRecord, Trajectory};
use crate::scalar::Scalar;

use super::{ess, msjd, SampleSeries, MSJD_BURN_IN};

/// Efficiency figures of one completed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub dims_per_block: usize,
    pub n_blocks: usize,
    pub n_substrategies: Option<usize>,
    pub ess_per_sec_min: f64,
    pub ess_per_sec_median: f64,
    pub msjd_mean: f64,
    pub acceptance_ratio: f64,
    /// Identifies the dataset, for refusing to compare unrelated runs.
    pub dataset: String,
}

/// Summarises a run from its samples; ESS is taken after `burn_in` (a fraction).
pub fn summarize_run<T: Scalar>(
    traj: &Trajectory<T>,
    series: &SampleSeries,
    burn_in: f64,
    dataset: &str,
) -> Result<RunSummary> {
    let kept = series.burn_in(burn_in);
    let wall = traj.stats.wall_clock_secs * (1.0 - burn_in);
    let e = ess(&kept, wall.max(f64::MIN_POSITIVE))?;
    let jumps = msjd(&series.burn_in(MSJD_BURN_IN))?;
    let stats = super::event_stats(traj);
    Ok(RunSummary {
        algorithm: traj.algorithm.as_str().to_string(),
        dims_per_block: traj.supports.iter().map(|b| b.len()).max().unwrap_or(0),
        n_blocks: traj.supports.len(),
        n_substrategies: (traj.algorithm == Algorithm::EvenOdd).then_some(traj.n_clocks),
        ess_per_sec_min: e.min_per_second,
        ess_per_sec_median: e.median_per_second,
        msjd_mean: jumps.iter().sum::<f64>() / jumps.len() as f64,
        acceptance_ratio: stats.acceptance_ratio,
        dataset: dataset.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub algorithm: String,
    pub dims_per_block: usize,
    pub n_blocks: usize,
    pub n_substrategies: String,
    pub ess_per_sec_min: f64,
    pub ess_per_sec_median: f64,
    pub msjd_mean: f64,
    /// Median ESS/s relative to the best run.
    pub rel_perf: f64,
}

pub fn compare_report(runs: &[RunSummary]) -> Result<Vec<CompareRow>> {
    if runs.len() < 2 {
        return Err(Error::Config("comparison needs at least two runs".into()));
    }
    if let Some(r) = runs.iter().find(|r| r.dataset != runs[0].dataset) {
        return Err(Error::Config(format!(
            "runs use different datasets ({} vs {})",
            runs[0].dataset, r.dataset
        )));
    }
    let best = runs.iter().map(|r| r.ess_per_sec_median).fold(0.0, f64::max);
    Ok(runs
        .iter()
        .map(|r| CompareRow {
            algorithm: r.algorithm.clone(),
            dims_per_block: r.dims_per_block,
            n_blocks: r.n_blocks,
            n_substrategies: r.n_substrategies.map_or("-".to_string(), |k| k.to_string()),
            ess_per_sec_min: r.ess_per_sec_min,
            ess_per_sec_median: r.ess_per_sec_median,
            msjd_mean: r.msjd_mean,
            rel_perf: if best > 0.0 { r.ess_per_sec_median / best } else { 1.0 },
        })
        .collect())
}

pub fn write_compare_csv<W: Write>(w: W, rows: &[CompareRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// One-based coordinate label `x[k,n]`.
fn label(k: usize, n: usize) -> String {
    format!("x[{},{}]", k + 1, n + 1)
}

/// `t` followed by one column per tracked coordinate.
pub fn write_samples_csv<W: Write>(w: W, series: &SampleSeries) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(series.tracked.iter().map(|&(k, n)| label(k, n)));
    wr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for (j, t) in series.times.iter().enumerate() {
        row.clear();
        row.push(format!("{t:?}"));
        row.extend(series.values.iter().map(|s| format!("{:?}", s[j])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub metric: String,
    /// Coordinate label or `all` for aggregates.
    pub coordinate: String,
    pub value: f64,
}

impl DiagnosticRow {
    pub fn new(metric: &str, coordinate: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.to_string(),
            coordinate: coordinate.into(),
            value,
        }
    }

    pub fn coordinate_label(k: usize, n: usize) -> String {
        label(k, n)
    }
}

pub fn write_diagnostics_csv<W: Write>(w: W, rows: &[DiagnosticRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// `lag` followed by one column per named autocorrelation function.
pub fn write_acf_csv<W: Write>(w: W, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["lag".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    wr.write_record(&header)?;
    let lags = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for lag in 0..lags {
        let mut row = vec![lag.to_string()];
        row.extend(columns.iter().map(|(_, v)| v.get(lag).map_or(String::new(), |x| format!("{x:?}"))));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(w: W, times: &[f64], log_posterior: &[f64]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "log_posterior"])?;
    for (t, v) in times.iter().zip(log_posterior) {
        wr.write_record([format!("{t:?}"), format!("{v:?}")])?;
    }
    wr.flush()?;
    Ok(())
}

fn block_field<T>(ev: &EventRecord<T>) -> String {
    let reflected = ev.reflected();
    if ev.block.is_some() {
        ev.block.map(|b| b.to_string()).unwrap_or_default()
    } else {
        reflected.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";")
    }
}

/// `time,kind,block_id`; even-odd bounces list every reflected block separated by `;`.
pub fn write_events_csv<T: Scalar, W: Write>(w: W, traj: &Trajectory<T>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["time", "kind", "block_id"])?;
    for ev in &traj.events {
        wr.write_record([format!("{:?}", ev.time), ev.kind.as_str().to_string(), block_field(ev)])?;
    }
    wr.flush()?;
    Ok(())
}
