//! Experiment configuration, read from JSON. Unknown keys are rejected so a
//! misspelt parameter never silently falls back to its default.

use std::path::{Path, PathBuf};

use bbps_core::sampler::BoundStrategy;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Linear Gaussian AR(1) model with a squared-exponential kernel transition.
    Ar {
        d: usize,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "default_sigma2")]
        sigma2: f64,
        #[serde(default = "default_psi")]
        psi: f64,
    },
    /// Multivariate stochastic volatility with leverage and Student-t mixing.
    Sv {
        d: usize,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default = "default_alpha")]
        alpha: Vec<f64>,
        #[serde(default = "default_nu")]
        nu: f64,
        #[serde(default = "default_eta_sd")]
        eta_sd: f64,
        #[serde(default = "default_eta_corr")]
        eta_corr: f64,
        /// Leverage within an asset and across assets, as correlations.
        #[serde(default = "default_leverage")]
        leverage: [f64; 2],
        /// Common correlation of the unit-variance return noise. The model uses
        /// the empirical return covariance when absent; simulation then uses 0.5.
        #[serde(default)]
        eps_corr: Option<f64>,
    },
}

fn default_sigma2() -> f64 {
    5.0
}
fn default_psi() -> f64 {
    0.1
}
fn default_alpha() -> Vec<f64> {
    vec![0.99]
}
fn default_nu() -> f64 {
    15.0
}
fn default_eta_sd() -> f64 {
    0.2
}
fn default_eta_corr() -> f64 {
    0.7
}
fn default_leverage() -> [f64; 2] {
    [-0.4, -0.3]
}

impl ModelConfig {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Self::Ar { d, n, .. } | Self::Sv { d, n, .. } => (d, n),
        }
    }
}

/// Where observations come from: a directory written by `simulate-data`, or an
/// in-memory simulation with `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { dir: None, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    Single,
    Grid {
        spatial_width: usize,
        temporal_width: usize,
        #[serde(default)]
        spatial_overlap: usize,
        #[serde(default)]
        temporal_overlap: usize,
        #[serde(default)]
        partition: PartitionKind,
    },
    /// A strategy JSON file `{d, N, blocks, partition}`.
    File { path: PathBuf },
    /// Factors of `width` consecutive terms, for the local sampler.
    Factors { width: usize },
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self::Single
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    /// Parity colouring of a grid, greedy colouring when parity clashes.
    #[default]
    EvenOdd,
    Greedy,
    /// Every block its own sub-strategy.
    Trivial,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    Bbps,
    #[default]
    Eobps,
    Local,
}

impl SamplerChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bbps => "bbps",
            Self::Eobps => "eobps",
            Self::Local => "local",
        }
    }
}

/// A fixed lookahead or `"auto"` for tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaConfig {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self::Auto(AutoTag::Auto)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityInitKind {
    #[default]
    Gaussian,
    Ones,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default)]
    pub kind: SamplerChoice,
    #[serde(default = "default_total_time")]
    pub total_time: f64,
    #[serde(default = "default_refresh")]
    pub refresh_rate: f64,
    #[serde(default)]
    pub theta: ThetaConfig,
    #[serde(default)]
    pub tune: TuneConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub velocity_init: VelocityInitKind,
    #[serde(default)]
    pub bound: BoundStrategy,
    /// Checkpoint every this many velocity changes; 0 disables.
    #[serde(default)]
    pub checkpoint_every: usize,
}

fn default_total_time() -> f64 {
    100.0
}
fn default_refresh() -> f64 {
    1.0
}
fn default_parallelism() -> usize {
    1
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerChoice::default(),
            total_time: default_total_time(),
            refresh_rate: default_refresh(),
            theta: ThetaConfig::default(),
            tune: TuneConfig::default(),
            seed: 0,
            parallelism: default_parallelism(),
            velocity_init: VelocityInitKind::default(),
            bound: BoundStrategy::default(),
            checkpoint_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(default = "default_initial_theta")]
    pub initial_theta: f64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_warmup")]
    pub warmup_time: f64,
}

fn default_initial_theta() -> f64 {
    0.1
}
fn default_rounds() -> usize {
    8
}
fn default_warmup() -> f64 {
    20.0
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            initial_theta: default_initial_theta(),
            rounds: default_rounds(),
            warmup_time: default_warmup(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Sampling interval `Δ` in sampler seconds.
    #[serde(default = "default_interval")]
    pub interval: f64,
    /// One-based `[k, n]` coordinates; all coordinates when absent.
    #[serde(default)]
    pub tracked: Option<Vec<[usize; 2]>>,
    /// Fraction of samples discarded before ESS and moments.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Keep the full event log and write `events.csv`.
    #[serde(default = "default_true")]
    pub events: bool,
}

fn default_interval() -> f64 {
    0.1
}
fn default_burn_in() -> f64 {
    0.1
}
fn default_max_lag() -> usize {
    100
}
fn default_true() -> bool {
    true
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            interval: default_interval(),
            tracked: None,
            burn_in: default_burn_in(),
            max_lag: default_max_lag(),
            events: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let (d, n) = self.model.dims();
        if d == 0 || n == 0 {
            return bad(format!("model dimensions must be positive, got {d}x{n}"));
        }
        let s = &self.sampler;
        if !(s.total_time > 0.0 && s.total_time.is_finite()) {
            return bad(format!("sampler.total_time must be positive, got {}", s.total_time));
        }
        if !(s.refresh_rate >= 0.0) {
            return bad(format!("sampler.refresh_rate must be non-negative, got {}", s.refresh_rate));
        }
        if let ThetaConfig::Fixed(t) = s.theta {
            if !(t > 0.0) {
                return bad(format!("sampler.theta must be positive or \"auto\", got {t}"));
            }
        }
        if s.parallelism == 0 {
            return bad("sampler.parallelism must be at least 1".into());
        }
        let g = &self.diagnostics;
        if !(g.interval > 0.0) {
            return bad(format!("diagnostics.interval must be positive, got {}", g.interval));
        }
        if !(0.0..1.0).contains(&g.burn_in) {
            return bad(format!("diagnostics.burn_in must lie in [0, 1), got {}", g.burn_in));
        }
        if let Some(t) = &g.tracked {
            if let Some([k, c]) = t.iter().find(|[k, c]| *k == 0 || *c == 0 || *k > d || *c > n) {
                return bad(format!("tracked coordinate [{k}, {c}] outside 1..={d} x 1..={n}"));
            }
        }
        match (&self.strategy, s.kind) {
            (StrategyConfig::Factors { .. }, SamplerChoice::Local) => {}
            (_, SamplerChoice::Local) => return bad("the local sampler needs strategy kind \"factors\"".into()),
            (StrategyConfig::Factors { .. }, k) => {
                return bad(format!("strategy kind \"factors\" only applies to the local sampler, not {}", k.as_str()))
            }
            _ => {}
        }
        if let StrategyConfig::Factors { width: 0 } = self.strategy {
            return bad("factor width must be positive".into());
        }
        Ok(())
    }

    /// Zero-based tracked coordinates.
    pub fn tracked(&self) -> Option<Vec<(usize, usize)>> {
        self.diagnostics
            .tracked
            .as_ref()
            .map(|t| t.iter().map(|&[k, c]| (k - 1, c - 1)).collect())
    }
}
