mod common;

use bbps_core::blocking::{make_grid_strategy, Block, BlockingStrategy};
use bbps_core::diagnostics::{discretize, energy_trace, event_stats, msjd, mse_vs_time, SampleSeries};
use bbps_core::sampler::{
    simulate_bbps, EventKind, Payload, RecordingOptions, SamplerOptions, Trajectory, VelocityInit,
};
use bbps_core::targets::{Capabilities, IsotropicGaussian, Target};
use bbps_core::{Mat, Result};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `U ≡ 0`: the sampler never bounces, so only refreshments change velocities.
struct Flat(usize, usize);

impl Target<f64> for Flat {
    fn dims(&self) -> (usize, usize) {
        (self.0, self.1)
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_factors: false,
            is_quadratic: true,
        }
    }
    fn potential(&self, _x: &Mat<f64>) -> Result<f64> {
        Ok(0.0)
    }
    fn gradient(&self, _x: &Mat<f64>) -> Result<Mat<f64>> {
        Ok(Mat::zeros(self.0, self.1))
    }
}

fn pure_flow(strategy: &BlockingStrategy, total_time: f64) -> Trajectory<f64> {
    let (d, n) = strategy.dims();
    let opts = SamplerOptions {
        total_time,
        refresh_rate: 0.0,
        velocity_init: VelocityInit::Ones,
        ..Default::default()
    };
    simulate_bbps(&Flat(d, n), strategy, &opts).unwrap()
}

#[test]
fn discretize_pure_linear_flow() {
    let s = BlockingStrategy::single_block(2, 3).unwrap();
    let tr = pure_flow(&s, 1.0);
    assert!(tr.events.iter().all(|e| !e.kind.changes_velocity()));
    let series = discretize(&tr, 0.5, None).unwrap();
    assert_eq!(series.times, vec![0.0, 0.5, 1.0]);
    for values in &series.values {
        assert_eq!(values, &vec![0.0, 0.5, 1.0]);
    }
    // Δ beyond the horizon keeps only x(0)
    assert_eq!(discretize(&tr, 2.0, None).unwrap().len(), 1);
    assert!(discretize(&tr, 0.0, None).is_err());
}

#[test]
fn msjd_of_pure_flow_scales_with_phi_squared() {
    // width 2, overlap 1 over 4 columns: columns 1 and 2 are shared by two blocks
    let s = make_grid_strategy(1, 4, 1, 2, 0, 1).unwrap();
    let tr = pure_flow(&s, 10.0);
    let series = discretize(&tr, 0.5, None).unwrap();
    let j = msjd(&series).unwrap();
    for (&(k, c), v) in series.tracked.iter().zip(&j) {
        let phi = s.phi(k, c) as f64;
        assert!((v - (0.5 * phi).powi(2)).abs() < 1e-12, "({k},{c}) φ={phi}: {v}");
    }
    assert_eq!(j[1] / j[0], 4.0);

    let constant = SampleSeries {
        values: vec![vec![1.5; 10]],
        tracked: vec![(0, 0)],
        times: (0..10).map(|i| i as f64).collect(),
        interval: 1.0,
        log_posterior: None,
        max_rates: None,
        wall_per_sampler_second: 1.0,
    };
    assert_eq!(msjd(&constant).unwrap(), vec![0.0]);
}

/// Independent replay: walk the log and integrate `x + s·(φ⋆v)` between events.
fn replay_oracle(tr: &Trajectory<f64>, times: &[f64]) -> Vec<Mat<f64>> {
    let mut x = tr.x0.clone();
    let mut v = tr.v0.clone();
    let mut now = 0.0;
    let mut events = tr.events.iter().peekable();
    let mut out = Vec::new();
    let drift = |x: &mut Mat<f64>, v: &Mat<f64>, dt: f64| {
        for ((xi, vi), p) in x.as_mut_slice().iter_mut().zip(v.as_slice()).zip(tr.phi.as_slice()) {
            *xi += dt * p * vi;
        }
    };
    for &t in times {
        while let Some(ev) = events.next_if(|e| e.time <= t) {
            drift(&mut x, &v, ev.time - now);
            now = ev.time;
            match &ev.payload {
                Payload::None => {}
                Payload::Full(m) => v = m.clone(),
                Payload::Blocks(blocks) => {
                    for (id, vb) in blocks {
                        let b: &Block = &tr.supports[*id];
                        let mut it = vb.iter();
                        for c in b.cols.clone() {
                            for k in b.rows.clone() {
                                v[(k, c)] = *it.next().unwrap();
                            }
                        }
                    }
                }
            }
        }
        let mut at = x.clone();
        drift(&mut at, &v, t - now);
        out.push(at);
    }
    out
}

fn recorded_run() -> (Trajectory<f64>, BlockingStrategy) {
    let m = ar_instance(3, 16, 21);
    let s = make_grid_strategy(3, 16, 2, 6, 1, 2).unwrap();
    let opts = SamplerOptions {
        total_time: 40.0,
        theta: 0.2,
        seed: 21,
        ..Default::default()
    };
    (simulate_bbps(&m, &s, &opts).unwrap(), s)
}

#[test]
fn discretize_matches_event_replay() {
    let (tr, _) = recorded_run();
    assert!(tr.events.len() > 100);
    let series = discretize(&tr, 0.37, None).unwrap();
    let oracle = replay_oracle(&tr, &series.times);
    for (j, x) in oracle.iter().enumerate() {
        for (i, &(k, c)) in series.tracked.iter().enumerate() {
            assert!((series.values[i][j] - x[(k, c)]).abs() < 1e-12);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut times: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..tr.total_time)).collect();
    times.sort_by(f64::total_cmp);
    let oracle = replay_oracle(&tr, &times);
    for (t, x) in times.iter().zip(&oracle) {
        let (pos, _) = tr.state_at(*t).unwrap();
        assert!(pos.max_abs_diff(x) < 1e-12, "t = {t}");
    }
}

#[test]
fn evaluation_at_an_event_uses_the_new_velocity() {
    let (tr, _) = recorded_run();
    let ev = tr.events.iter().find(|e| e.kind == EventKind::Bounce).unwrap();
    let (_, v) = tr.state_at(ev.time).unwrap();
    let (_, before) = tr.state_at(ev.time - 1e-9).unwrap();
    let Payload::Blocks(blocks) = &ev.payload else { panic!("bounce without payload") };
    let (id, vb) = &blocks[0];
    let b = &tr.supports[*id];
    let at: Vec<f64> = b.cols.clone().flat_map(|c| b.rows.clone().map(move |k| (k, c))).map(|i| v[i]).collect();
    assert_eq!(&at, vb);
    assert_ne!(v, before);
}

#[test]
fn mse_against_truth() {
    let truth = Mat::from_fn(2, 3, |k, c| (k + c) as f64);
    let tracked: Vec<(usize, usize)> = (0..3).flat_map(|c| (0..2).map(move |k| (k, c))).collect();
    let exact = SampleSeries {
        values: tracked.iter().map(|&(k, c)| vec![truth[(k, c)]; 50]).collect(),
        tracked,
        times: (0..50).map(|i| i as f64).collect(),
        interval: 1.0,
        log_posterior: None,
        max_rates: None,
        wall_per_sampler_second: 0.5,
    };
    let curve = mse_vs_time(&exact, &truth).unwrap();
    assert!(curve.iter().all(|p| p.mse == 0.0));
    assert_eq!(curve[10].cpu_time, 5.0);

    // running means of i.i.d. N(θ, 1): MSE ≈ 1/n, slope −1 on log-log
    let (reps, n) = (400, 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let truth = Mat::filled(1, reps, 0.7);
    let noisy = SampleSeries {
        values: (0..reps)
            .map(|_| (0..n).map(|_| 0.7 + rng.sample::<f64, _>(rand_distr::StandardNormal)).collect())
            .collect(),
        tracked: (0..reps).map(|c| (0, c)).collect(),
        times: (0..n).map(|i| i as f64).collect(),
        interval: 1.0,
        log_posterior: None,
        max_rates: None,
        wall_per_sampler_second: 1.0,
    };
    let curve = mse_vs_time(&noisy, &truth).unwrap();
    let pts: Vec<(f64, f64)> = [10usize, 30, 100, 300, 1000, 2000]
        .iter()
        .map(|&m| (((m) as f64).ln(), curve[m - 1].mse.ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() < 0.15, "slope {slope}");
}

#[test]
fn mse_of_blocked_sampler_against_kalman() {
    let m = ar_instance(2, 5, 24);
    let post = posterior(&m);
    let s = make_grid_strategy(2, 5, 2, 2, 0, 1).unwrap();
    let opts = SamplerOptions {
        total_time: 5000.0,
        theta: 0.3,
        seed: 24,
        recording: RecordingOptions::samples_only(0.5),
        ..Default::default()
    };
    let series = simulate_bbps(&m, &s, &opts).unwrap().samples.unwrap();
    let curve = mse_vs_time(&series, &post.mean).unwrap();
    let early = curve[curve.len() / 100].mse;
    let last = curve.last().unwrap().mse;
    assert!(last < early && last < 1e-2, "{early} -> {last}");
}

#[test]
fn energy_trace_is_the_negative_potential() {
    let t = IsotropicGaussian::new(2, 2);
    let zero = SampleSeries {
        values: vec![vec![0.0; 3]; 4],
        tracked: vec![(0, 0), (1, 0), (0, 1), (1, 1)],
        times: vec![0.0, 1.0, 2.0],
        interval: 1.0,
        log_posterior: None,
        max_rates: None,
        wall_per_sampler_second: 1.0,
    };
    assert_eq!(energy_trace::<f64, _>(&t, &zero).unwrap(), vec![0.0; 3]);

    let (tr, _) = recorded_run();
    let m = ar_instance(3, 16, 21);
    let series = discretize(&tr, 0.1, None).unwrap();
    let energy = energy_trace(&m, &series).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..20 {
        let j = rng.random_range(0..series.len());
        let x = tr.state_at(series.times[j]).unwrap().0;
        assert!((energy[j] + m.potential(&x).unwrap()).abs() < 1e-9);
    }
    let partial = discretize(&tr, 0.1, Some(&[(0, 0)])).unwrap();
    assert!(energy_trace(&m, &partial).is_err());
}

#[test]
fn event_statistics() {
    let s = BlockingStrategy::single_block(2, 2).unwrap();
    // shorter than one lookahead window: not even a bound expiry
    let quiet = event_stats(&pure_flow(&s, 0.05));
    assert_eq!((quiet.proposals, quiet.bounces, quiet.refreshes, quiet.expiries), (0, 0, 0, 0));
    assert_eq!(quiet.acceptance_ratio, 0.0);

    let (tr, _) = recorded_run();
    let st = event_stats(&tr);
    assert!(st.from_log);
    let proposals = tr.events.iter().filter(|e| matches!(e.kind, EventKind::Bounce | EventKind::ProposedRejected)).count();
    let bounces = tr.events.iter().filter(|e| e.kind == EventKind::Bounce).count();
    assert_eq!(st.acceptance_ratio, bounces as f64 / proposals as f64);
    assert_eq!(st.proposals, tr.stats.proposals);
    assert_eq!(st.window_counts.iter().sum::<u64>(), st.proposals);

    // refreshments form a homogeneous Poisson process of rate γ
    let (gamma, total) = (2.0, 1000.0);
    let opts = SamplerOptions {
        total_time: total,
        refresh_rate: gamma,
        seed: 26,
        ..Default::default()
    };
    let refreshes = event_stats(&simulate_bbps(&Flat(2, 2), &s, &opts).unwrap()).refreshes as f64;
    let mean = gamma * total;
    assert!((refreshes - mean).abs() < 3.0 * mean.sqrt(), "{refreshes}");
}
