use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

use super::SampleSeries;

/// Biased autocovariance `γ(k) = (1/n) Σ (x_i − x̄)(x_{i+k} − x̄)` for all lags, via FFT.
pub fn autocovariance(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// Autocorrelation up to `max_lag` (inclusive), normalised by the lag-0 autocovariance.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if 4 * max_lag >= x.len() {
        return Err(Error::Parameter(format!(
            "max lag {max_lag} must be below a quarter of the series length {}",
            x.len()
        )));
    }
    let g = autocovariance(x);
    if g[0] == 0.0 {
        let mut out = vec![0.0; max_lag + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    Ok(g[..=max_lag].iter().map(|&v| v / g[0]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EssEstimate {
    pub ess: f64,
    /// The series was constant; `ess` is reported as 1.
    pub degenerate: bool,
}

/// Initial positive sequence estimator: sums autocorrelation pairs
/// `ρ(2m) + ρ(2m+1)` while they stay positive; the result is capped at `n`.
pub fn ess_series(x: &[f64]) -> EssEstimate {
    let n = x.len();
    let g = autocovariance(x);
    if n == 0 || !(g[0] > 0.0) {
        return EssEstimate {
            ess: 1.0,
            degenerate: true,
        };
    }
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (g[2 * m] + g[2 * m + 1]) / g[0];
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    EssEstimate {
        ess: (n as f64 / tau).min(n as f64),
        degenerate: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssSummary {
    pub per_coordinate: Vec<EssEstimate>,
    pub per_second: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub min_per_second: f64,
    pub median_per_second: f64,
    pub mean_per_second: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-coordinate ESS and ESS per wall-clock second (`wall_secs` covering the series).
pub fn ess(series: &SampleSeries, wall_secs: f64) -> Result<EssSummary> {
    if series.len() < 100 {
        return Err(Error::Parameter(format!(
            "ESS needs at least 100 samples, got {}",
            series.len()
        )));
    }
    if series.values.is_empty() {
        return Err(Error::Parameter("no tracked coordinates".into()));
    }
    let per_coordinate: Vec<EssEstimate> = series.values.iter().map(|s| ess_series(s)).collect();
    let values: Vec<f64> = per_coordinate.iter().map(|e| e.ess).collect();
    let per_second: Vec<f64> = values.iter().map(|&e| e / wall_secs).collect();
    let stats = |v: &[f64]| {
        let mut s = v.to_vec();
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        (min, median(&mut s), mean)
    };
    let (min, med, mean) = stats(&values);
    let (min_s, med_s, mean_s) = stats(&per_second);
    Ok(EssSummary {
        per_coordinate,
        per_second,
        min,
        median: med,
        mean,
        min_per_second: min_s,
        median_per_second: med_s,
        mean_per_second: mean_s,
    })
}

/// Batch-means standard error of the mean using `batches` equal batches.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    assert!(batches >= 2 && size >= 1, "need at least two non-empty batches");
    let means: Vec<f64> = x
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let e = white(n, seed);
        let mut x = vec![0.0; n];
        x[0] = e[0] / (1.0 - rho * rho).sqrt();
        for i in 1..n {
            x[i] = rho * x[i - 1] + e[i];
        }
        x
    }

    #[test]
    fn autocovariance_matches_direct_sum() {
        let x = ar1(300, 0.3, 1);
        let g = autocovariance(&x);
        let mean = x.iter().sum::<f64>() / 300.0;
        for k in [0, 1, 7, 299] {
            let direct: f64 = (0..300 - k).map(|i| (x[i] - mean) * (x[i + k] - mean)).sum::<f64>() / 300.0;
            assert!((g[k] - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn iid_ess_close_to_n() {
        let e = ess_series(&white(10_000, 3));
        assert!((0.8..=1.2).contains(&(e.ess / 10_000.0)), "{e:?}");
    }

    #[test]
    fn ar1_ess_matches_closed_form() {
        let n = 100_000;
        let e = ess_series(&ar1(n, 0.5, 4));
        let ratio = e.ess / n as f64;
        assert!((ratio - 1.0 / 3.0).abs() < 0.2 / 3.0, "{ratio}");
    }

    #[test]
    fn constant_series_is_flagged() {
        let e = ess_series(&[2.5; 200]);
        assert_eq!(e, EssEstimate { ess: 1.0, degenerate: true });
    }

    #[test]
    fn acf_properties() {
        let n = 10_000;
        let a = acf(&white(n, 5), 20).unwrap();
        assert_eq!(a[0], 1.0);
        let band = 3.0 / (n as f64).sqrt();
        assert!(a[1..].iter().all(|v| v.abs() < band));
        let b = acf(&ar1(n, 0.5, 6), 5).unwrap();
        assert!((b[1] - 0.5).abs() < 3.0 * ((1.0 - 0.25) / n as f64).sqrt());
        assert!(acf(&[1.0; 8], 2).is_err());
    }

    #[test]
    fn batch_means_on_iid() {
        let x = white(40_000, 8);
        let se = batch_means_se(&x, 40);
        assert!((se / (1.0 / 200.0) - 1.0).abs() < 0.35, "{se}");
    }
}
