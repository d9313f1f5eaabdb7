use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::targets::Target;

use super::{simulate, RecordingOptions, SamplerKind, SamplerOptions, VelocityInit};

/// Acceptable range of bounding-process events per lookahead window.
pub const TUNE_BAND: (f64, f64) = (0.8, 1.25);

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOptions {
    pub initial_theta: f64,
    pub rounds: usize,
    /// Sampler time simulated per round.
    pub warmup_time: f64,
    /// Exponent of the multiplicative update `θ ← θ · m^{−damping}`.
    pub damping: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            initial_theta: 0.1,
            rounds: 8,
            warmup_time: 50.0,
            damping: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult {
    pub theta: f64,
    /// Events per window measured at `theta`.
    pub events_per_window: f64,
    pub converged: bool,
    /// `(θ, measured events per window)` for every round.
    pub history: Vec<(f64, f64)>,
    pub warning: Option<String>,
}

/// Multiplicative search for `θ` with `measure(θ) ≈ 1`; returns the round whose
/// measurement was closest to 1 on a log scale.
pub fn tune_multiplicative(
    initial_theta: f64,
    rounds: usize,
    damping: f64,
    mut measure: impl FnMut(f64) -> Result<f64>,
) -> Result<TuneResult> {
    if !(initial_theta > 0.0) || rounds == 0 {
        return Err(Error::Config("tuning needs a positive initial theta and at least one round".into()));
    }
    let mut theta = initial_theta;
    let mut history = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let m = measure(theta)?;
        history.push((theta, m));
        theta = if m > 0.0 { theta * m.powf(-damping) } else { theta * 4.0 };
    }
    let &(theta, m) = history
        .iter()
        .min_by(|a, b| {
            let da = if a.1 > 0.0 { a.1.ln().abs() } else { f64::INFINITY };
            let db = if b.1 > 0.0 { b.1.ln().abs() } else { f64::INFINITY };
            da.total_cmp(&db)
        })
        .expect("at least one round");
    let converged = (TUNE_BAND.0..=TUNE_BAND.1).contains(&m);
    let warning = (!converged).then(|| {
        format!("theta tuning did not reach the target band; best theta {theta:.4} gives {m:.3} events per window")
    });
    Ok(TuneResult {
        theta,
        events_per_window: m,
        converged,
        history,
        warning,
    })
}

/// Tunes `θ` so the bounding process fires about once per lookahead window,
/// continuing one warm-up chain across rounds.
pub fn tune_theta<T: Scalar, M: Target<T> + ?Sized>(
    target: &M,
    kind: SamplerKind<'_>,
    base: &SamplerOptions<T>,
    tune: &TuneOptions,
) -> Result<TuneResult> {
    if !(tune.warmup_time > 0.0) {
        return Err(Error::Config("warm-up time must be positive".into()));
    }
    let mut opts = SamplerOptions {
        total_time: tune.warmup_time,
        recording: RecordingOptions {
            events: false,
            velocities: false,
            checkpoint_every: 0,
            ..RecordingOptions::default()
        },
        ..base.clone()
    };
    let mut round = 0u64;
    tune_multiplicative(tune.initial_theta, tune.rounds, tune.damping, |theta| {
        opts.theta = theta;
        opts.seed = base.seed.wrapping_add(round);
        round += 1;
        let traj = simulate(target, kind, &opts)?;
        opts.initial_position = Some(traj.x_final.clone());
        opts.velocity_init = VelocityInit::Given(traj.v_final.clone());
        Ok(traj.events_per_window())
    })
}
