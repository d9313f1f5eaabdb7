//! Small, fast versions of the invariance checks: samplers against exact
//! oracles and the algebraic identities the samplers rely on.

use std::time::Instant;

use bbps_core::blocking::{even_odd_partition, make_grid_strategy};
use bbps_core::diagnostics::batch_means_se;
use bbps_core::oracle::{dense_gaussian_oracle, finite_diff_gradient, kalman_smooth, simulate_ar_data, simulate_sv_data};
use bbps_core::sampler::{rate, reflect, simulate, simulate_eobps, RecordingOptions, SamplerKind, SamplerOptions};
use bbps_core::targets::{factorize, ArGaussianModel, StochVolModel, SvParams, Target};
use bbps_core::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::CliError;

type Check = Result<String, String>;

fn ar_instance(d: usize, n: usize, seed: u64) -> Result<ArGaussianModel<f64>, String> {
    let a = ArGaussianModel::<f64>::kernel_transition(d, 5.0, 0.1).map_err(|e| e.to_string())?;
    let data = simulate_ar_data(&a, n, seed, 1.0);
    ArGaussianModel::from_transition(a, data.y).map_err(|e| e.to_string())
}

fn random_matrix(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracles_agree() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=40);
        let m = ar_instance(d, n, i).map_err(|e| e.to_string())?;
        let dense = dense_gaussian_oracle(&m).and_then(|o| o.mean()).map_err(|e| e.to_string())?;
        let kalman = kalman_smooth(&m).map_err(|e| e.to_string())?;
        worst = worst.max(kalman.mean.max_abs_diff(&dense));
    }
    verdict(worst < 1e-8, format!("Kalman vs dense max error {worst:.1e}"))
}

fn reflection_and_rates() -> Check {
    let (d, n) = (3, 12);
    let m = ar_instance(d, n, 12)?;
    let s = make_grid_strategy(d, n, 2, 4, 1, 2).map_err(|e| e.to_string())?;
    let phi: Mat<f64> = s.phi_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut inv, mut ident) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let x = random_matrix(d, n, &mut rng);
        let v = random_matrix(d, n, &mut rng);
        let mut lhs = 0.0;
        for b in s.blocks() {
            let r = reflect(&m, b, &x, &v).map_err(|e| e.to_string())?;
            inv = inv.max(reflect(&m, b, &x, &r).map_err(|e| e.to_string())?.max_abs_diff(&v));
            lhs += rate(&m, b, &x, &r).map_err(|e| e.to_string())? - rate(&m, b, &x, &v).map_err(|e| e.to_string())?;
        }
        let rhs = -m.gradient(&x).map_err(|e| e.to_string())?.frobenius_dot(&phi.hadamard(&v));
        ident = ident.max((lhs - rhs).abs());
    }
    verdict(
        inv <= 1e-12 && ident <= 1e-10,
        format!("reflection involution {inv:.1e}, rate identity {ident:.1e}"),
    )
}

fn gradients() -> Check {
    let (d, n) = (2, 8);
    let ar = ar_instance(d, n, 13)?;
    let sigma_eps = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let params = SvParams {
        sigma_eps: Some(sigma_eps.clone()),
        ..SvParams::default()
    };
    let data = simulate_sv_data(&params, &sigma_eps, n, 13, false).map_err(|e| e.to_string())?;
    let sv = StochVolModel::build(&SvParams { gamma: Some(data.gamma), ..params }, data.y).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = random_matrix(d, n, &mut rng);
        for t in [&ar as &dyn Target<f64>, &sv] {
            let g = t.gradient(&x).map_err(|e| e.to_string())?;
            let fd = finite_diff_gradient(t, &x, 1e-5).map_err(|e| e.to_string())?;
            let scale = g.as_slice().iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
            worst = worst.max(g.max_abs_diff(&fd) / scale);
        }
    }
    verdict(worst < 1e-5, format!("AR and SV gradients vs central differences, max relative error {worst:.1e}"))
}

fn invariance() -> Check {
    let m = ar_instance(2, 4, 14)?;
    let post = kalman_smooth(&m).map_err(|e| e.to_string())?;
    let s = make_grid_strategy(2, 4, 2, 2, 0, 1).map_err(|e| e.to_string())?;
    let p = even_odd_partition(&s).map_err(|e| e.to_string())?;
    let f = factorize(&m, 1).map_err(|e| e.to_string())?;
    let opts = SamplerOptions {
        total_time: 1e4,
        theta: 0.3,
        seed: 14,
        recording: RecordingOptions::samples_only(0.5),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for kind in [SamplerKind::Blocked(&s), SamplerKind::EvenOdd(&s, &p), SamplerKind::Local(&f)] {
        let tr = simulate(&m, kind, &opts).map_err(|e| e.to_string())?;
        if tr.stats.violations > 0 {
            return Err(format!("{} bound violations", tr.stats.violations));
        }
        let series = tr.samples.ok_or("no samples")?;
        for (vals, &(k, c)) in series.values.iter().zip(&series.tracked) {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            worst = worst.max((mean - post.mean[(k, c)]).abs() / batch_means_se(vals, 50));
        }
    }
    verdict(worst < 4.0, format!("three samplers vs Kalman means, worst {worst:.2} standard errors"))
}

fn determinism() -> Check {
    let m = ar_instance(4, 40, 15)?;
    let s = make_grid_strategy(4, 40, 2, 8, 1, 4).map_err(|e| e.to_string())?;
    let p = even_odd_partition(&s).map_err(|e| e.to_string())?;
    let base = SamplerOptions {
        total_time: 20.0,
        theta: 0.1,
        seed: 15,
        ..Default::default()
    };
    let one = simulate_eobps(&m, &s, &p, &base).map_err(|e| e.to_string())?;
    let four = simulate_eobps(&m, &s, &p, &SamplerOptions { parallelism: 4, ..base }).map_err(|e| e.to_string())?;
    let same = one.events.len() == four.events.len()
        && one.events.iter().zip(&four.events).all(|(a, b)| a.time.to_bits() == b.time.to_bits() && a.kind == b.kind)
        && one.x_final == four.x_final;
    verdict(same, format!("{} events, identical with 1 and 4 workers: {same}", one.events.len()))
}

pub fn run() -> Result<(), CliError> {
    let checks: [(&str, fn() -> Check); 5] = [
        ("oracles", oracles_agree),
        ("reflection and rates", reflection_and_rates),
        ("gradients", gradients),
        ("invariance", invariance),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match &result {
            Ok(detail) => println!("ok    {name} [{secs:.1}s] {detail}"),
            Err(detail) => {
                println!("FAIL  {name} [{secs:.1}s] {detail}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(failed.join(", ")))
    }
}
