//! Blocked bouncy particle samplers for smoothing in state space models.
//!
//! The crate provides rectangular blocking strategies over `d × N` latent
//! states ([`blocking`]), differentiable targets ([`targets`]), the piecewise
//! deterministic samplers themselves ([`sampler`]), exact oracles for testing
//! ([`oracle`]) and the output analysis used in experiments ([`diagnostics`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the element type to `f64`.

pub mod blocking;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod targets;

pub use error::{Error, Result};
pub use matrix::Mat;
pub use scalar::Scalar;

pub type StateMatrix = Mat<f64>;
pub type VelocityMatrix = Mat<f64>;
pub type StateMatrix32 = Mat<f32>;
pub type ArModel = targets::ArGaussianModel<f64>;
pub type ArModel32 = targets::ArGaussianModel<f32>;
pub type SvModel = targets::StochVolModel<f64>;
pub type SvModel32 = targets::StochVolModel<f32>;
