use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::flow::Flow;
use super::units::ClockUnits;

/// How constant rate bounds over a lookahead window are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundStrategy {
    /// Exact affine for quadratic targets, guarded grid otherwise.
    Auto,
    /// `max(0, r(0), r(w))`; exact when the rate argument is affine along the flow.
    ExactAffine,
    /// Rate at the end of the window (and at its start), for log-concave blocks.
    LookaheadEndpoint,
    /// `safety · max(0, r(s_i))` over `points` equispaced offsets.
    GuardedGrid { points: usize, safety: f64 },
}

impl Default for BoundStrategy {
    fn default() -> Self {
        Self::Auto
    }
}

impl BoundStrategy {
    pub const GRID: Self = Self::GuardedGrid {
        points: 16,
        safety: 1.5,
    };

    pub fn resolve(self, quadratic: bool) -> Self {
        match self {
            Self::Auto if quadratic => Self::ExactAffine,
            Self::Auto => Self::GRID,
            other => other,
        }
    }

    /// Whether bounds are heuristic and need runtime monitoring.
    pub fn is_monitored(self) -> bool {
        !matches!(self, Self::ExactAffine)
    }
}

/// Per-unit constant bounds valid on `[t, t + window)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSet {
    pub bounds: Vec<f64>,
    pub window: f64,
}

/// Evaluates bounds for a set of units at shifted positions along the flow.
pub(crate) struct Bounder<T> {
    strategy: BoundStrategy,
    safety: f64,
    scratch: Vec<Mat<T>>,
}

impl<T: Scalar> Bounder<T> {
    /// `strategy` must already be resolved.
    pub fn new(strategy: BoundStrategy, d: usize, n: usize) -> Self {
        let (points, safety) = match strategy {
            BoundStrategy::GuardedGrid { points, safety } => (points.max(2), safety),
            _ => (2, 1.0),
        };
        Self {
            strategy,
            safety,
            scratch: vec![Mat::zeros(d, n); points],
        }
    }

    pub fn safety(&self) -> f64 {
        self.safety
    }

    /// Called after a monitored bound was exceeded.
    pub fn escalate(&mut self) {
        if self.strategy.is_monitored() {
            self.safety *= 1.5;
        }
    }

    pub fn compute<U: ClockUnits<T>>(
        &mut self,
        flow: &Flow<T>,
        units: &U,
        ids: &[usize],
        t: f64,
        window: f64,
        pool: Option<&ThreadPool>,
    ) -> Result<Vec<f64>> {
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let lo = ids.iter().map(|&u| units.read_cols(u).start).min().unwrap_or(0);
        let hi = ids.iter().map(|&u| units.read_cols(u).end).max().unwrap_or(0);
        let last = (self.scratch.len() - 1) as f64;
        for (i, m) in self.scratch.iter_mut().enumerate() {
            flow.fill(m, lo..hi, t + window * i as f64 / last);
        }
        let eval = |m: &Mat<T>| -> Result<Vec<f64>> {
            let r: Vec<f64> = units.directional(m, &flow.v, ids)?.iter().map(|r| r.as_f64()).collect();
            match r.iter().position(|r| !r.is_finite()) {
                Some(i) => Err(Error::Numerical { term: "rate", index: ids[i] }),
                None => Ok(r),
            }
        };
        let per_point: Vec<Vec<f64>> = match pool {
            Some(p) => p.install(|| self.scratch.par_iter().map(eval).collect::<Result<_>>())?,
            None => self.scratch.iter().map(eval).collect::<Result<_>>()?,
        };
        let scale = match self.strategy {
            BoundStrategy::ExactAffine => 1.0,
            _ => self.safety,
        };
        Ok((0..ids.len())
            .map(|i| scale * per_point.iter().fold(0.0f64, |m, r| m.max(r[i])))
            .collect())
    }
}
