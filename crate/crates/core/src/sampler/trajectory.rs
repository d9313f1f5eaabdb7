use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::blocking::Block;
use crate::diagnostics::SampleSeries;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Scalar;

use super::flow::Flow;
use super::kernel::write_block;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "bbps")]
    Blocked,
    #[serde(rename = "eobps")]
    EvenOdd,
    #[serde(rename = "local")]
    Local,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Blocked => "bbps",
            Self::EvenOdd => "eobps",
            Self::Local => "local",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Bounce,
    Refresh,
    BoundExpiry,
    ProposedRejected,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bounce => "bounce",
            Self::Refresh => "refresh",
            Self::BoundExpiry => "bound-expiry",
            Self::ProposedRejected => "proposed-rejected",
        }
    }

    pub fn changes_velocity(self) -> bool {
        matches!(self, Self::Bounce | Self::Refresh)
    }
}

/// Velocity changes carried by an event.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload<T> {
    None,
    /// New column-major block velocities `(unit id, v_B)`, applied in order.
    Blocks(Vec<(usize, Vec<T>)>),
    /// Complete redrawn velocity.
    Full(Mat<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord<T> {
    pub time: f64,
    pub kind: EventKind,
    /// Proposed block or factor (blocked and local samplers).
    pub block: Option<usize>,
    /// Sub-strategy whose clock rang (even-odd sampler).
    pub clock: Option<usize>,
    pub payload: Payload<T>,
}

impl<T> EventRecord<T> {
    /// Ids of the units whose velocity was reflected.
    pub fn reflected(&self) -> Vec<usize> {
        match &self.payload {
            Payload::Blocks(b) => b.iter().map(|(id, _)| *id).collect(),
            _ => Vec::new(),
        }
    }
}

/// Lazy flow state after `event_index` events; enough for exact replay.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub event_index: u64,
    pub time: f64,
    pub tcol: Vec<f64>,
    pub x: Mat<f64>,
    pub v: Mat<f64>,
}

const MAGIC: &[u8; 8] = b"BBPSCKPT";
const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint layout, all little-endian:
///
/// ```text
/// "BBPSCKPT" | version: u32 | d: u64 | N: u64 | time: f64 | event_index: u64
/// | tcol: N × f64 | x: d·N × f64 | v: d·N × f64      (matrices column-major)
/// ```
impl Checkpoint {
    pub(crate) fn capture<T: Scalar>(flow: &Flow<T>, event_index: usize, time: f64) -> Self {
        Self {
            event_index: event_index as u64,
            time,
            tcol: flow.tcol.clone(),
            x: flow.x.cast(),
            v: flow.v.cast(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.x.shape()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (d, n) = self.dims();
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(d as u64).to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.event_index.to_le_bytes())?;
        for v in self.tcol.iter().chain(self.x.as_slice()).chain(self.v.as_slice()) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let d = u64::from_le_bytes(next(&mut r)?) as usize;
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let time = f64::from_le_bytes(next(&mut r)?);
        let event_index = u64::from_le_bytes(next(&mut r)?);
        let mut floats = |len: usize, r: &mut R| -> Result<Vec<f64>> {
            (0..len).map(|_| Ok(f64::from_le_bytes(next(r)?))).collect()
        };
        let tcol = floats(n, &mut r)?;
        let x = Mat::from_col_major(d, n, floats(d * n, &mut r)?)?;
        let v = Mat::from_col_major(d, n, floats(d * n, &mut r)?)?;
        Ok(Self {
            event_index,
            time,
            tcol,
            x,
            v,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    /// Events of the bounding process (thinning proposals).
    pub proposals: u64,
    /// Proposals that changed at least one velocity.
    pub bounces: u64,
    /// Individual block reflections (several per bounce in the even-odd sampler).
    pub reflections: u64,
    pub refreshes: u64,
    pub expiries: u64,
    /// Proposals where the true rate exceeded its bound.
    pub violations: u64,
    /// Accepted reflections skipped because the block gradient vanished.
    pub degenerate: u64,
    /// Bounds were heuristic (grid or endpoint) rather than exact.
    pub bias_risk: bool,
    pub final_safety: f64,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub algorithm: Algorithm,
    pub total_time: f64,
    pub theta: f64,
    pub refresh_rate: f64,
    pub seed: u64,
    pub phi: Mat<T>,
    /// Velocity support of each clock unit, indexed by the ids used in events.
    pub supports: Vec<Block>,
    /// Number of event clocks: blocks or factors, or sub-strategies for the even-odd sampler.
    pub n_clocks: usize,
    pub x0: Mat<T>,
    pub v0: Mat<T>,
    pub x_final: Mat<T>,
    pub v_final: Mat<T>,
    pub events: Vec<EventRecord<T>>,
    /// Whether event payloads were kept, so the path can be replayed.
    pub replayable: bool,
    pub checkpoints: Vec<Checkpoint>,
    pub samples: Option<SampleSeries>,
    pub stats: RunStats,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.x0.shape()
    }

    /// Thinning proposals per lookahead window: `proposals · θ / T`.
    pub fn events_per_window(&self) -> f64 {
        self.stats.proposals as f64 * self.theta / self.total_time
    }

    /// Replay cursor from the start of the trajectory.
    pub fn replay(&self) -> Result<Replay<'_, T>> {
        if !self.replayable {
            return Err(Error::MissingRecord("velocity payloads"));
        }
        Ok(Replay {
            traj: self,
            flow: Flow::new(self.x0.clone(), self.v0.clone(), self.phi.clone(), 0.0),
            next: 0,
        })
    }

    /// Replay cursor positioned at the latest checkpoint not after `t`.
    pub fn replay_from(&self, t: f64) -> Result<Replay<'_, T>> {
        let Some(cp) = self.checkpoints.iter().rev().find(|c| c.time <= t) else {
            return self.replay();
        };
        if !self.replayable {
            return Err(Error::MissingRecord("velocity payloads"));
        }
        Ok(Replay {
            traj: self,
            flow: Flow::from_parts(cp.x.cast(), cp.v.cast(), self.phi.clone(), cp.tcol.clone()),
            next: cp.event_index as usize,
        })
    }

    /// `(x(t), v(t))`, right-continuous at event times.
    pub fn state_at(&self, t: f64) -> Result<(Mat<T>, Mat<T>)> {
        let mut r = self.replay_from(t)?;
        r.advance_to(t);
        Ok((r.position(t), r.velocity().clone()))
    }
}

/// Forward-only cursor that re-applies recorded velocity changes.
pub struct Replay<'a, T> {
    traj: &'a Trajectory<T>,
    flow: Flow<T>,
    next: usize,
}

impl<T: Scalar> Replay<'_, T> {
    /// Applies every event with time `≤ t`.
    pub fn advance_to(&mut self, t: f64) {
        while let Some(ev) = self.traj.events.get(self.next) {
            if ev.time > t {
                break;
            }
            apply_event(&mut self.flow, &self.traj.supports, ev);
            self.next += 1;
        }
    }

    pub fn position(&self, t: f64) -> Mat<T> {
        self.flow.position(t)
    }

    #[inline]
    pub fn value(&self, k: usize, n: usize, t: f64) -> T {
        self.flow.value(k, n, t)
    }

    pub fn velocity(&self) -> &Mat<T> {
        &self.flow.v
    }
}

/// Must mirror the order of operations in the samplers.
pub(crate) fn apply_event<T: Scalar>(flow: &mut Flow<T>, supports: &[Block], ev: &EventRecord<T>) {
    match &ev.payload {
        Payload::None => {}
        Payload::Blocks(updates) => {
            for (id, values) in updates {
                let b = &supports[*id];
                flow.sync(b.cols.clone(), ev.time);
                write_block(&mut flow.v, b, values);
            }
        }
        Payload::Full(v) => {
            flow.sync_all(ev.time);
            flow.v.as_mut_slice().copy_from_slice(v.as_slice());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let cp = Checkpoint {
            event_index: 42,
            time: 1.25,
            tcol: vec![0.5, 1.0, 1.25],
            x: Mat::from_fn(2, 3, |k, c| k as f64 * 0.1 - c as f64),
            v: Mat::from_fn(2, 3, |k, c| (k * c) as f64 + 0.3),
        };
        let mut buf = Vec::new();
        cp.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"BBPSCKPT");
        assert_eq!(buf.len(), 8 + 4 + 8 * 4 + 8 * (3 + 12));
        assert_eq!(Checkpoint::read_from(buf.as_slice()).unwrap(), cp);
        buf[8] = 9;
        assert!(Checkpoint::read_from(buf.as_slice()).is_err());
    }
}
