use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bbps_core::blocking::{even_odd_partition, greedy_partition, make_grid_strategy, BlockingStrategy, Partition, StrategyFile};
use bbps_core::diagnostics::{
    acf, compare_report, ess, event_stats, msjd, summarize_run, write_acf_csv, write_compare_csv,
    write_diagnostics_csv, write_events_csv, write_samples_csv, write_trace_csv, DiagnosticRow, RunSummary,
    SampleSeries, MSJD_BURN_IN,
};
use bbps_core::oracle::kalman_smooth;
use bbps_core::sampler::{
    simulate, tune_theta, RecordingOptions, SamplerKind, SamplerOptions, Trajectory, TuneOptions, VelocityInit,
};
use bbps_core::targets::{factorize, FactorSet, Target};
use bbps_core::Mat;
use serde_json::json;

use crate::config::{ExperimentConfig, PartitionKind, SamplerChoice, StrategyConfig, ThetaConfig, VelocityInitKind};
use crate::data::{self, Dataset, Model};
use crate::{CliError, Overrides};

/// Tracked coordinates whose autocorrelation goes to `acf.csv`, besides the energy.
const ACF_COORDINATES: usize = 10;

fn load_config(path: &Path, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = &o.out {
        cfg.output.dir = out.clone();
    }
    if let Some(s) = o.seed {
        cfg.sampler.seed = s;
    }
    if let Some(s) = o.data_seed {
        cfg.data.seed = s;
    }
    if let Some(p) = o.parallelism {
        cfg.sampler.parallelism = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: PathBuf) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn simulate_data(config: &Path, o: &Overrides) -> Result<(), CliError> {
    let cfg = load_config(config, o)?;
    let data = data::simulate(&cfg.model, cfg.data.seed)?;
    // the round trip through the constructor catches parameters the model rejects
    data::build_model(&cfg.model, &data)?;
    data::write(&cfg.output.dir, &data)?;
    let (d, n) = cfg.model.dims();
    println!("wrote {d}x{n} dataset to {}", cfg.output.dir.display());
    Ok(())
}

enum Clocks {
    Blocked(BlockingStrategy),
    EvenOdd(BlockingStrategy, Partition),
    Local(FactorSet),
}

impl Clocks {
    fn kind(&self) -> SamplerKind<'_> {
        match self {
            Self::Blocked(s) => SamplerKind::Blocked(s),
            Self::EvenOdd(s, p) => SamplerKind::EvenOdd(s, p),
            Self::Local(f) => SamplerKind::Local(f),
        }
    }
}

fn auto_partition(s: &BlockingStrategy, warnings: &mut Vec<String>) -> Partition {
    even_odd_partition(s).unwrap_or_else(|e| {
        warnings.push(format!("even-odd colouring unavailable ({e}); using greedy colouring"));
        greedy_partition(s)
    })
}

fn clocks(cfg: &ExperimentConfig, target: &dyn Target<f64>, warnings: &mut Vec<String>) -> Result<Clocks, CliError> {
    let (d, n) = cfg.model.dims();
    let (strategy, partition) = match &cfg.strategy {
        StrategyConfig::Factors { width } => return Ok(Clocks::Local(factorize(target, *width)?)),
        StrategyConfig::Single => {
            let s = BlockingStrategy::single_block(d, n)?;
            let p = Partition::trivial(&s);
            (s, p)
        }
        &StrategyConfig::Grid {
            spatial_width,
            temporal_width,
            spatial_overlap,
            temporal_overlap,
            partition,
        } => {
            let s = make_grid_strategy(d, n, spatial_width, temporal_width, spatial_overlap, temporal_overlap)?;
            let p = match partition {
                PartitionKind::EvenOdd => auto_partition(&s, warnings),
                PartitionKind::Greedy => greedy_partition(&s),
                PartitionKind::Trivial => Partition::trivial(&s),
            };
            (s, p)
        }
        StrategyConfig::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read strategy {}: {e}", path.display())))?;
            let file: StrategyFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("strategy {}: {e}", path.display())))?;
            let (s, p) = file.build()?;
            let p = match p {
                Some(p) => p,
                None => auto_partition(&s, warnings),
            };
            (s, p)
        }
    };
    Ok(match cfg.sampler.kind {
        SamplerChoice::Bbps => Clocks::Blocked(strategy),
        SamplerChoice::Eobps => Clocks::EvenOdd(strategy, partition),
        SamplerChoice::Local => unreachable!("validated: local needs factors"),
    })
}

fn sampler_options(cfg: &ExperimentConfig) -> SamplerOptions<f64> {
    let s = &cfg.sampler;
    let g = &cfg.diagnostics;
    SamplerOptions {
        total_time: s.total_time,
        refresh_rate: s.refresh_rate,
        theta: match s.theta {
            ThetaConfig::Fixed(t) => t,
            ThetaConfig::Auto(_) => s.tune.initial_theta,
        },
        seed: s.seed,
        bound: s.bound,
        initial_position: None,
        velocity_init: match s.velocity_init {
            VelocityInitKind::Gaussian => VelocityInit::Gaussian,
            VelocityInitKind::Ones => VelocityInit::Ones,
        },
        parallelism: s.parallelism,
        recording: RecordingOptions {
            events: g.events,
            velocities: g.events,
            checkpoint_every: s.checkpoint_every,
            sample_interval: Some(g.interval),
            tracked: cfg.tracked(),
            log_posterior: true,
            max_rates: false,
        },
    }
}

fn label(k: usize, n: usize) -> String {
    DiagnosticRow::coordinate_label(k, n)
}

fn column_means(series: &SampleSeries) -> Vec<f64> {
    series.values.iter().map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64).collect()
}

/// Mean squared difference between the sample means and `reference` over the tracked coordinates.
fn mean_error(series: &SampleSeries, means: &[f64], reference: &Mat<f64>) -> f64 {
    let sq: f64 = series
        .tracked
        .iter()
        .zip(means)
        .map(|(&(k, c), m)| (m - reference[(k, c)]).powi(2))
        .sum();
    sq / series.tracked.len().max(1) as f64
}

fn diagnostics(
    cfg: &ExperimentConfig,
    model: &Model,
    data: &Dataset,
    traj: &Trajectory<f64>,
    series: &SampleSeries,
    warnings: &mut Vec<String>,
) -> Result<Vec<DiagnosticRow>, CliError> {
    let kept = series.burn_in(cfg.diagnostics.burn_in);
    let mut rows = Vec::new();
    let mut push = |metric: &str, coord: String, v: f64| rows.push(DiagnosticRow::new(metric, coord, v));
    let wall = traj.stats.wall_clock_secs * (1.0 - cfg.diagnostics.burn_in);
    match ess(&kept, wall.max(f64::MIN_POSITIVE)) {
        Ok(e) => {
            for (i, &(k, c)) in kept.tracked.iter().enumerate() {
                push("ess", label(k, c), e.per_coordinate[i].ess);
                push("ess_per_sec", label(k, c), e.per_second[i]);
            }
            push("ess_min", "all".into(), e.min);
            push("ess_median", "all".into(), e.median);
            push("ess_per_sec_min", "all".into(), e.min_per_second);
            push("ess_per_sec_median", "all".into(), e.median_per_second);
        }
        Err(e) => warnings.push(format!("ESS skipped: {e}")),
    }
    if let Ok(j) = msjd(&series.burn_in(MSJD_BURN_IN)) {
        for (&(k, c), v) in series.tracked.iter().zip(&j) {
            push("msjd", label(k, c), *v);
        }
        push("msjd_mean", "all".into(), j.iter().sum::<f64>() / j.len().max(1) as f64);
    }
    let means = column_means(&kept);
    for (&(k, c), m) in kept.tracked.iter().zip(&means) {
        push("posterior_mean", label(k, c), *m);
    }
    if let Model::Ar(ar) = model {
        let post = kalman_smooth(ar)?;
        push("mse_vs_oracle", "all".into(), mean_error(&kept, &means, &post.mean));
    }
    if let Some(x) = &data.x_true {
        push("mse_vs_truth", "all".into(), mean_error(&kept, &means, x));
    }
    let st = event_stats(traj);
    push("acceptance_ratio", "all".into(), st.acceptance_ratio);
    push("events_per_window", "all".into(), st.events_per_window);
    push("bound_violations", "all".into(), traj.stats.violations as f64);
    push("wall_clock_secs", "all".into(), traj.stats.wall_clock_secs);
    Ok(rows)
}

fn write_acf(path: PathBuf, series: &SampleSeries, max_lag: usize) -> Result<(), CliError> {
    let lag = max_lag.min(series.len().saturating_sub(1) / 4);
    let mut columns = Vec::new();
    if let Some(lp) = &series.log_posterior {
        columns.push(("energy".to_string(), acf(lp, lag)?));
    }
    for (s, &(k, c)) in series.values.iter().zip(&series.tracked).take(ACF_COORDINATES) {
        columns.push((label(k, c), acf(s, lag)?));
    }
    write_acf_csv(create(path)?, &columns)?;
    Ok(())
}

pub fn run(config: &Path, o: &Overrides) -> Result<(), CliError> {
    let cfg = load_config(config, o)?;
    let out = cfg.output.dir.clone();
    std::fs::create_dir_all(&out)?;
    let data = match &cfg.data.dir {
        Some(dir) => data::load(dir, &cfg.model)?,
        None => {
            let data = data::simulate(&cfg.model, cfg.data.seed)?;
            data::write(&out.join("data"), &data)?;
            data
        }
    };
    let model = data::build_model(&cfg.model, &data)?;
    let target = model.target();
    let mut warnings = Vec::new();
    let clocks = clocks(&cfg, target, &mut warnings)?;
    let mut opts = sampler_options(&cfg);

    let tuning = match cfg.sampler.theta {
        ThetaConfig::Fixed(_) => None,
        ThetaConfig::Auto(_) => {
            let t = &cfg.sampler.tune;
            let res = tune_theta(
                target,
                clocks.kind(),
                &opts,
                &TuneOptions {
                    initial_theta: t.initial_theta,
                    rounds: t.rounds,
                    warmup_time: t.warmup_time,
                    ..TuneOptions::default()
                },
            )?;
            opts.theta = res.theta;
            warnings.extend(res.warning.clone());
            Some(res)
        }
    };

    let traj = match simulate(target, clocks.kind(), &opts) {
        Ok(t) => t,
        Err(bbps_core::Error::NonFiniteState { time, cause, snapshot }) => {
            let path = out.join("checkpoint.bin");
            snapshot.write_to(create(path.clone())?)?;
            return Err(CliError::Aborted {
                message: format!("sampler aborted at t = {time}: {cause}"),
                snapshot: path,
            });
        }
        Err(e) => return Err(e.into()),
    };
    warnings.extend(traj.warnings.iter().cloned());
    let series = traj
        .samples
        .clone()
        .ok_or(CliError::Numerical("the sampler returned no samples".into()))?;

    if cfg.diagnostics.events {
        write_events_csv(create(out.join("events.csv"))?, &traj)?;
    }
    write_samples_csv(create(out.join("samples.csv"))?, &series)?;
    if let Some(lp) = &series.log_posterior {
        write_trace_csv(create(out.join("trace.csv"))?, &series.times, lp)?;
    }
    write_acf(out.join("acf.csv"), &series.burn_in(cfg.diagnostics.burn_in), cfg.diagnostics.max_lag)?;
    let rows = diagnostics(&cfg, &model, &data, &traj, &series, &mut warnings)?;
    write_diagnostics_csv(create(out.join("diagnostics.csv"))?, &rows)?;
    if let Some(cp) = traj.checkpoints.last() {
        cp.write_to(create(out.join("checkpoint.bin"))?)?;
    }

    let dataset = data::fingerprint(&data.y);
    let summary = match summarize_run(&traj, &series, cfg.diagnostics.burn_in, &dataset) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("no comparison summary: {e}"));
            None
        }
    };
    let meta = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "schema_version": cfg.schema_version,
        "algorithm": traj.algorithm.as_str(),
        "seed": cfg.sampler.seed,
        "data_seed": cfg.data.dir.is_none().then_some(cfg.data.seed),
        "dataset": dataset,
        "theta": opts.theta,
        "theta_tuned": tuning.is_some(),
        "tuning": tuning.as_ref().map(|t| json!({
            "history": t.history,
            "events_per_window": t.events_per_window,
            "converged": t.converged,
        })),
        "total_time": traj.total_time,
        "n_clocks": traj.n_clocks,
        "n_units": traj.supports.len(),
        "wall_clock_secs": traj.stats.wall_clock_secs,
        "stats": traj.stats,
        "samples": series.len(),
        "warnings": warnings,
        "summary": summary,
        "config": cfg,
    });
    let mut w = create(out.join("metadata.json"))?;
    serde_json::to_writer_pretty(&mut w, &meta).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "{} run: T = {}, theta = {:.4}, {} proposals, {} bounces, {} violations, {:.2}s wall; outputs in {}",
        traj.algorithm.as_str(),
        traj.total_time,
        opts.theta,
        traj.stats.proposals,
        traj.stats.bounces,
        traj.stats.violations,
        traj.stats.wall_clock_secs,
        out.display()
    );
    Ok(())
}

fn read_summary(dir: &Path) -> Result<RunSummary, CliError> {
    let path = dir.join("metadata.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{} is not a completed run: {e}", dir.display())))?;
    let meta: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match meta.get("summary") {
        Some(s) if !s.is_null() => serde_json::from_value(s.clone())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        _ => Err(CliError::Config(format!("{} has no efficiency summary", path.display()))),
    }
}

pub fn compare(runs: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let summaries = runs.iter().map(|r| read_summary(r)).collect::<Result<Vec<_>, _>>()?;
    let rows = compare_report(&summaries)?;
    match out {
        Some(p) => write_compare_csv(create(p.to_path_buf())?, &rows)?,
        None => write_compare_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}
