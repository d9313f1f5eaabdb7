//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run alone with `cargo test -p bbps-core --test acceptance`; pass criterion
//! numbers as arguments (`-- 3 7`) to run a subset.

mod common;

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use bbps_core::blocking::{even_odd_partition, greedy_partition, make_grid_strategy, BlockingStrategy, Partition};
use bbps_core::diagnostics::{
    acf, batch_means_se, compare_report, msjd, summarize_run, write_compare_csv, RunSummary, SampleSeries,
    MSJD_BURN_IN, SV_BURN_IN_SAMPLES,
};
use bbps_core::oracle::{dense_gaussian_oracle, finite_diff_gradient, kalman_smooth, simulate_ar_data, simulate_sv_data};
use bbps_core::sampler::{
    rate, reflect, simulate, simulate_bbps, simulate_eobps, tune_theta, EventRecord, Payload,
    RecordingOptions, SamplerKind, SamplerOptions, TuneOptions, VelocityInit, TUNE_BAND,
};
use bbps_core::targets::{factorize, ArGaussianModel, SvParams, StochVolModel, Target};
use bbps_core::Mat;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    /// Failure is reported and leaves a warning artifact, without failing the suite.
    soft: bool,
    run: Check,
}

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "invariance vs Kalman oracle", soft: false, run: invariance },
        Criterion { id: 2, name: "Kalman vs dense solve", soft: false, run: oracle_consistency },
        Criterion { id: 3, name: "deterministic parallelism", soft: false, run: deterministic_parallelism },
        Criterion { id: 4, name: "reflection algebra", soft: false, run: reflection_algebra },
        Criterion { id: 5, name: "rate-difference identity", soft: false, run: rate_identity },
        Criterion { id: 6, name: "thinning exactness", soft: false, run: thinning_exactness },
        Criterion { id: 7, name: "gradient checks", soft: false, run: gradient_checks },
        Criterion { id: 8, name: "phi speed-up of MSJD", soft: false, run: phi_speed_up },
        Criterion { id: 9, name: "theta tuning", soft: false, run: theta_tuning },
        Criterion { id: 10, name: "logarithmic max-rate growth", soft: false, run: max_rate_growth },
        Criterion { id: 11, name: "efficiency ordering (soft)", soft: true, run: efficiency_ordering },
        Criterion { id: 12, name: "SV stationarity", soft: false, run: sv_stationarity },
    ];
    let mut hard_failures = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) if c.soft => ("WARN", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("criterion {:>2} {status} {} [{secs:.1}s] {detail}", c.id, c.name);
        if outcome.is_err() && !c.soft {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        println!("{hard_failures} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn artifact_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("artifact directory");
    dir
}

fn samples(total_time: f64, theta: f64, seed: u64, interval: f64) -> SamplerOptions<f64> {
    SamplerOptions {
        total_time,
        theta,
        seed,
        recording: RecordingOptions::samples_only(interval),
        ..Default::default()
    }
}

fn invariance() -> Result<String, String> {
    let m = ar_instance(2, 5, 1);
    let post = kalman_smooth(&m).unwrap();
    let s = make_grid_strategy(2, 5, 2, 2, 1, 1).unwrap();
    let p = even_odd_partition(&s).unwrap();
    let f = factorize(&m, 1).unwrap();
    let o = samples(5e4, 0.3, 101, 0.5);
    let mut report = String::new();
    let mut failed = false;
    for kind in [SamplerKind::Blocked(&s), SamplerKind::EvenOdd(&s, &p), SamplerKind::Local(&f)] {
        let start = Instant::now();
        let tr = simulate(&m, kind, &o).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let fails = moment_failures(&tr.samples.unwrap().burn_in(0.01), &post, 3.0, 0.1);
        let name = kind.algorithm().as_str();
        write!(report, "{name}: {} mismatches in {secs:.1}s; ", fails.len()).unwrap();
        if !fails.is_empty() || secs > 120.0 {
            failed = true;
            write!(report, "{fails:?}; ").unwrap();
        }
    }
    ensure(!failed, report)
}

fn oracle_consistency() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = rng.random_range(1..=8);
        let n = rng.random_range(1..=256 / d);
        let a = ArGaussianModel::<f64>::kernel_transition(d, rng.random_range(0.5..10.0), rng.random_range(0.05..2.0))
            .unwrap();
        let data = simulate_ar_data(&a, n, i, 1.0);
        let m = ArGaussianModel::from_transition(a, data.y).unwrap();
        let dense = dense_gaussian_oracle(&m).unwrap().mean().unwrap();
        worst = worst.max(kalman_smooth(&m).unwrap().mean.max_abs_diff(&dense));
    }
    ensure(worst < 1e-8, format!("max abs mean error {worst:.2e} over 50 instances"))
}

fn log_bytes(events: &[EventRecord<f64>]) -> Vec<u8> {
    let mut out = Vec::new();
    for e in events {
        out.extend(e.time.to_bits().to_le_bytes());
        out.extend(e.kind.as_str().as_bytes());
        out.extend(e.block.map_or(u64::MAX, |b| b as u64).to_le_bytes());
        out.extend(e.clock.map_or(u64::MAX, |b| b as u64).to_le_bytes());
        match &e.payload {
            Payload::None => out.push(0),
            Payload::Blocks(blocks) => {
                out.push(1);
                for (id, v) in blocks {
                    out.extend((*id as u64).to_le_bytes());
                    v.iter().for_each(|x| out.extend(x.to_bits().to_le_bytes()));
                }
            }
            Payload::Full(m) => {
                out.push(2);
                m.as_slice().iter().for_each(|x| out.extend(x.to_bits().to_le_bytes()));
            }
        }
    }
    out
}

fn deterministic_parallelism() -> Result<String, String> {
    let m = ar_instance(6, 118, 3);
    let s = make_grid_strategy(6, 118, 3, 10, 1, 4).unwrap();
    let p = even_odd_partition(&s).unwrap();
    let base = SamplerOptions {
        total_time: 120.0,
        theta: 0.05,
        seed: 42,
        ..Default::default()
    };
    let one = simulate_eobps(&m, &s, &p, &base).unwrap();
    let eight = simulate_eobps(&m, &s, &p, &SamplerOptions { parallelism: 8, ..base }).unwrap();
    let (a, b) = (log_bytes(&one.events), log_bytes(&eight.events));
    ensure(
        one.events.len() >= 10_000 && a == b && one.x_final == eight.x_final,
        format!("{} vs {} events, {} log bytes, identical: {}", one.events.len(), eight.events.len(), a.len(), a == b),
    )
}

fn block_dot(g: &Mat<f64>, w: &Mat<f64>, b: &bbps_core::blocking::Block) -> f64 {
    let mut s = 0.0;
    for (j, c) in b.cols.clone().enumerate() {
        for (i, k) in b.rows.clone().enumerate() {
            s += g[(i, j)] * w[(k, c)];
        }
    }
    s
}

fn reflection_algebra() -> Result<String, String> {
    let (d, n) = (3, 12);
    let m = ar_instance(d, n, 4);
    let s = make_grid_strategy(d, n, 2, 4, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut inv, mut norm, mut sign) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let x = random_matrix(d, n, &mut rng);
        let v = random_matrix(d, n, &mut rng);
        let b = s.block(rng.random_range(0..s.len()));
        let g = m.block_gradient(&x, b).unwrap();
        let r = reflect(&m, b, &x, &v).unwrap();
        inv = inv.max(reflect(&m, b, &x, &r).unwrap().max_abs_diff(&v));
        let sq = |w: &Mat<f64>| -> f64 {
            b.cols.clone().flat_map(|c| b.rows.clone().map(move |k| (k, c))).map(|i| w[i] * w[i]).sum()
        };
        norm = norm.max((sq(&r) - sq(&v)).abs());
        sign = sign.max((block_dot(&g, &r, b) + block_dot(&g, &v, b)).abs());
    }
    let worst = inv.max(norm).max(sign);
    ensure(
        worst <= 1e-12,
        format!("10000 checks; involution {inv:.1e}, block norm {norm:.1e}, derivative sign {sign:.1e}"),
    )
}

fn rate_identity() -> Result<String, String> {
    let (d, n) = (4, 16);
    let m = ar_instance(d, n, 5);
    let s = make_grid_strategy(d, n, 3, 6, 1, 3).unwrap();
    let phi: Mat<f64> = s.phi_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = random_matrix(d, n, &mut rng);
        let v = random_matrix(d, n, &mut rng);
        let lhs: f64 = s
            .blocks()
            .iter()
            .map(|b| {
                let r = reflect(&m, b, &x, &v).unwrap();
                rate(&m, b, &x, &r).unwrap() - rate(&m, b, &x, &v).unwrap()
            })
            .sum();
        let rhs = -m.gradient(&x).unwrap().frobenius_dot(&phi.hadamard(&v));
        worst = worst.max((lhs - rhs).abs());
    }
    ensure(worst <= 1e-10, format!("max deviation {worst:.1e} over 1000 points"))
}

fn thinning_exactness() -> Result<String, String> {
    let m = ar_instance(3, 30, 6);
    let s = make_grid_strategy(3, 30, 3, 6, 1, 2).unwrap();
    let o = SamplerOptions {
        total_time: 3500.0,
        theta: 0.1,
        seed: 6,
        recording: RecordingOptions {
            events: false,
            velocities: false,
            checkpoint_every: 0,
            ..Default::default()
        },
        ..Default::default()
    };
    let tr = simulate_bbps(&m, &s, &o).unwrap();
    let st = &tr.stats;
    ensure(
        st.proposals >= 100_000 && st.violations == 0 && st.bounces <= st.proposals,
        format!("{} proposals, {} violations, acceptance {:.3}", st.proposals, st.violations, st.bounces as f64 / st.proposals as f64),
    )
}

fn sv_model(d: usize, n: usize, seed: u64) -> StochVolModel<f64> {
    let sigma_eps = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let params = SvParams {
        sigma_eps: Some(sigma_eps.clone()),
        ..Default::default()
    };
    let data = simulate_sv_data(&params, &sigma_eps, n, seed, false).unwrap();
    StochVolModel::build(&SvParams { gamma: Some(data.gamma), ..params }, data.y).unwrap()
}

fn gradient_checks() -> Result<String, String> {
    let (d, n) = (3, 10);
    let ar = ar_instance(d, n, 7);
    let sv = sv_model(d, n, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rel = |g: Mat<f64>, fd: Mat<f64>| {
        let scale = g.as_slice().iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        g.max_abs_diff(&fd) / scale
    };
    let (mut ea, mut es) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let x = random_matrix(d, n, &mut rng);
        ea = ea.max(rel(ar.gradient(&x).unwrap(), finite_diff_gradient(&ar, &x, 1e-5).unwrap()));
        es = es.max(rel(sv.gradient(&x).unwrap(), finite_diff_gradient(&sv, &x, 1e-5).unwrap()));
    }
    ensure(ea < 1e-5 && es < 1e-5, format!("max relative error AR {ea:.1e}, SV {es:.1e}"))
}

fn phi_speed_up() -> Result<String, String> {
    // width 20, overlap 9: stride 11, so N = 20 + 11k avoids a clamped last block
    let (d, n) = (3, 108);
    let m = ar_instance(d, n, 8);
    let s = make_grid_strategy(d, n, d, 20, 0, 9).unwrap();
    let tr = simulate_bbps(&m, &s, &samples(400.0, 0.1, 8, 0.01)).unwrap();
    let series = tr.samples.unwrap();
    let jumps = msjd(&series.burn_in(MSJD_BURN_IN)).unwrap();
    let (mut one, mut two) = (Vec::new(), Vec::new());
    for (&(k, c), j) in series.tracked.iter().zip(jumps) {
        match s.phi(k, c) {
            1 => one.push(j),
            2 => two.push(j),
            _ => {}
        }
    }
    let ratio = mean(&two) / mean(&one);
    ensure(
        (3.0..=5.0).contains(&ratio),
        format!("MSJD ratio {ratio:.3} ({} phi=2, {} phi=1 coordinates)", two.len(), one.len()),
    )
}

fn tuned_rate<M: Target<f64>>(target: &M, s: &BlockingStrategy, seed: u64) -> (f64, f64) {
    let base = SamplerOptions {
        seed,
        ..Default::default()
    };
    let tune = TuneOptions {
        warmup_time: 20.0,
        ..Default::default()
    };
    let tuned = tune_theta(target, SamplerKind::Blocked(s), &base, &tune).unwrap();
    let quiet = RecordingOptions {
        events: false,
        velocities: false,
        checkpoint_every: 0,
        ..Default::default()
    };
    let warm = simulate_bbps(
        target,
        s,
        &SamplerOptions {
            total_time: 20.0,
            theta: tuned.theta,
            recording: quiet.clone(),
            ..base.clone()
        },
    )
    .unwrap();
    let measured = simulate_bbps(
        target,
        s,
        &SamplerOptions {
            total_time: 50.0,
            theta: tuned.theta,
            seed: seed + 1000,
            initial_position: Some(warm.x_final.clone()),
            velocity_init: VelocityInit::Given(warm.v_final.clone()),
            recording: quiet,
            ..base
        },
    )
    .unwrap();
    (tuned.theta, measured.events_per_window())
}

fn theta_tuning() -> Result<String, String> {
    let ar = ar_instance(3, 40, 9);
    let sv = sv_model(3, 40, 9);
    let s = make_grid_strategy(3, 40, 2, 8, 1, 4).unwrap();
    let (ta, ra) = tuned_rate(&ar, &s, 9);
    let (ts, rs) = tuned_rate(&sv, &s, 9);
    let band = TUNE_BAND.0..=TUNE_BAND.1;
    ensure(
        band.contains(&ra) && band.contains(&rs),
        format!("events per window: AR {ra:.3} (theta {ta:.4}), SV {rs:.3} (theta {ts:.4})"),
    )
}

/// Sum of squared residuals of the least-squares fit `y ≈ a + b·x`.
fn line_sse(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    x.iter().zip(y).map(|(a, v)| (v - my - b * (a - mx)).powi(2)).sum()
}

fn max_rate_growth() -> Result<String, String> {
    // one data set; prefixes of length N give 2·k blocks of width 4, overlap 2
    let a = ArGaussianModel::<f64>::kernel_transition(2, 5.0, 0.1).unwrap();
    let y = simulate_ar_data(&a, 130, 10, 1.0).y;
    let mut sizes = Vec::new();
    let mut rates = Vec::new();
    for k in [2usize, 4, 8, 16, 32] {
        let n = 4 * k + 2;
        let m = ArGaussianModel::from_transition(a.clone(), Mat::from_fn(2, n, |r, c| y[(r, c)])).unwrap();
        let s = make_grid_strategy(2, n, 2, 4, 0, 2).unwrap();
        let p = even_odd_partition(&s).unwrap();
        assert!(p.sub_strategies().iter().all(|g| g.len() == k));
        let mut o = samples(2000.0, 0.1, 10, 0.5);
        o.recording.max_rates = true;
        o.recording.tracked = Some(vec![(0, 0)]);
        let tr = simulate_eobps(&m, &s, &p, &o).unwrap();
        let series = tr.samples.unwrap().burn_in(0.1);
        let mr = series.max_rates.unwrap();
        let avg = mr.iter().map(|g| mean(g)).sum::<f64>() / mr.len() as f64;
        sizes.push(k as f64);
        rates.push(avg);
    }
    let logs: Vec<f64> = sizes.iter().map(|k| k.ln()).collect();
    let (sse_log, sse_lin) = (line_sse(&logs, &rates), line_sse(&sizes, &rates));
    let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
    ensure(
        sse_log <= sse_lin,
        format!("mean max rate [{}]; SSE log fit {sse_log:.2e}, linear fit {sse_lin:.2e}", shown.join(", ")),
    )
}

/// Coordinates on a coarse sub-grid, enough for a stable median ESS.
fn ess_coordinates(d: usize, n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by((n / 25).max(1))
        .flat_map(|c| (0..d).step_by((d / 4).max(1)).map(move |k| (k, c)))
        .collect()
}

fn tuned_theta(m: &ArGaussianModel<f64>, kind: SamplerKind<'_>) -> f64 {
    let tune = TuneOptions {
        warmup_time: 20.0,
        rounds: 5,
        ..Default::default()
    };
    tune_theta(m, kind, &samples(1.0, 0.1, 0, 1.0), &tune).unwrap().theta
}

fn ess_run(m: &ArGaussianModel<f64>, kind: SamplerKind<'_>, theta: f64, seed: u64, t: &Table, dataset: &str) -> RunSummary {
    let (d, n) = m.dims();
    let mut o = samples(t.horizon, theta, seed, t.interval);
    o.recording.tracked = Some(ess_coordinates(d, n));
    let tr = simulate(m, kind, &o).unwrap();
    let series: SampleSeries = tr.samples.clone().unwrap();
    summarize_run(&tr, &series, 0.1, dataset).unwrap()
}

/// A desk-scale version of a comparison table: blocked and even-odd samplers on
/// `strategy` against local BPS with factors of `factor_width` terms, plus any
/// extra even-odd strategies reported alongside.
struct Table {
    d: usize,
    n: usize,
    blocks: (usize, usize, usize, usize),
    factor_width: usize,
    extra: Option<(usize, usize, usize, usize)>,
    horizon: f64,
    interval: f64,
}

fn grid_with_partition(d: usize, n: usize, g: (usize, usize, usize, usize)) -> (BlockingStrategy, Partition) {
    let s = make_grid_strategy(d, n, g.0, g.1, g.2, g.3).unwrap();
    let p = even_odd_partition(&s).unwrap_or_else(|_| greedy_partition(&s));
    (s, p)
}

fn efficiency_ordering() -> Result<String, String> {
    let dir = artifact_dir();
    let mut report = String::new();
    let mut all_ok = true;
    let tables = [
        Table {
            d: 3,
            n: 200,
            blocks: (3, 20, 0, 10),
            factor_width: 20,
            extra: None,
            horizon: 300.0,
            interval: 0.25,
        },
        Table {
            d: 50,
            n: 50,
            blocks: (50, 2, 0, 1),
            factor_width: 2,
            extra: Some((6, 9, 2, 3)),
            horizon: 100.0,
            interval: 0.1,
        },
    ];
    for t in &tables {
        let start = Instant::now();
        let dataset = format!("ar_d{}_n{}", t.d, t.n);
        let m = ar_instance(t.d, t.n, 11);
        let (s, p) = grid_with_partition(t.d, t.n, t.blocks);
        let f = factorize(&m, t.factor_width).unwrap();
        let extra = t.extra.map(|g| grid_with_partition(t.d, t.n, g));
        let mut kinds = vec![SamplerKind::Blocked(&s), SamplerKind::EvenOdd(&s, &p), SamplerKind::Local(&f)];
        if let Some((es, ep)) = &extra {
            kinds.push(SamplerKind::EvenOdd(es, ep));
        }
        let thetas: Vec<f64> = kinds.iter().map(|&k| tuned_theta(&m, k)).collect();
        let mut wins = 0;
        let mut rows = Vec::new();
        for seed in 0..5 {
            let runs: Vec<RunSummary> = kinds
                .iter()
                .zip(&thetas)
                .map(|(&k, &theta)| ess_run(&m, k, theta, seed, t, &dataset))
                .collect();
            let local = runs[2].ess_per_sec_median;
            if runs[0].ess_per_sec_median >= local && runs[1].ess_per_sec_median >= local {
                wins += 1;
            }
            rows.extend(compare_report(&runs).unwrap());
        }
        let file = std::fs::File::create(dir.join(format!("compare_{dataset}.csv"))).unwrap();
        write_compare_csv(file, &rows).unwrap();
        let median_rel = |i: usize| {
            let mut r: Vec<f64> = rows.iter().skip(i).step_by(kinds.len()).map(|r| r.rel_perf).collect();
            r.sort_by(f64::total_cmp);
            r[r.len() / 2]
        };
        let rel: Vec<String> = (0..kinds.len()).map(|i| format!("{:.2}", median_rel(i))).collect();
        write!(
            report,
            "{dataset}: blocked and even-odd ahead of local in {wins}/5 seeds, median rel. perf [{}] ({:.0}s); ",
            rel.join(", "),
            start.elapsed().as_secs_f64()
        )
        .unwrap();
        all_ok &= wins >= 3;
    }
    let warning = dir.join("efficiency_ordering_warning.txt");
    if all_ok {
        let _ = std::fs::remove_file(&warning);
    } else {
        std::fs::write(&warning, format!("efficiency ordering not reproduced: {report}\n")).unwrap();
        write!(report, "warning written to {}", warning.display()).unwrap();
    }
    ensure(all_ok, report)
}

fn sv_stationarity() -> Result<String, String> {
    let start = Instant::now();
    let (d, n) = (5, 100);
    let sigma_eps = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let params = SvParams::default();
    let data = simulate_sv_data(&params, &sigma_eps, n, 12, false).unwrap();
    let m = StochVolModel::build(
        &SvParams {
            gamma: Some(data.gamma),
            ..params
        },
        data.y,
    )
    .unwrap();
    let s = make_grid_strategy(d, n, 3, 10, 1, 4).unwrap();
    let p = even_odd_partition(&s).map_err(|e| e.to_string())?;
    // the tuned lookahead (~0.002) buys exactness we already have at twice the wall cost
    let mut o = samples(1500.0, 0.01, 12, 1.0);
    o.recording.tracked = Some(vec![(0, 0)]);
    o.recording.log_posterior = true;
    let tr = simulate_eobps(&m, &s, &p, &o).unwrap();
    let energy = tr.samples.unwrap().log_posterior.unwrap();
    let len = energy.len();
    let (half, q3) = (&energy[len / 2..], &energy[len / 2..3 * len / 4]);
    let se = batch_means_se(q3, 20);
    let gap = (mean(half) - mean(q3)).abs();
    let kept = &energy[SV_BURN_IN_SAMPLES..];
    let max_lag = (kept.len() - 1) / 4;
    let r = acf(kept, max_lag).unwrap();
    let tail_max = r[51..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure(
        gap <= 3.0 * se && tail_max < 0.1 && start.elapsed().as_secs_f64() <= 300.0,
        format!(
            "{len} samples; mean gap {gap:.3} vs 3 SE {:.3}; max ACF over lags 51..={max_lag}: {tail_max:.3}",
            3.0 * se
        ),
    )
}
