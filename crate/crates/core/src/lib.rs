//! Flow-matching motion tracking on a desk-scale articulated arm.
//!
//! The crate is organized the way the pipeline runs:
//!
//! * [`motion`]: motion clips, JSON ingestion, finite differences, segmentation,
//!   synthetic references.
//! * [`metrics`]: motion complexity scores and tracking metrics (MPJPE, Δvel,
//!   Δacc, success rate, termination rule).
//! * [`actuation`]: PD law, torque–speed envelope, friction, power penalty.
//! * [`flow`]: velocity-field network, flow-matching loss with exact gradients,
//!   Euler sampler, Adam, checkpoints.
//! * [`env`]: torque-controlled planar arm, observations, randomization, experts.
//! * [`distill`]: DAgger distillation, residual composition, evolution-strategy
//!   refinement, policy evaluation.
//! * [`cli`]: the `flowtrack` command line.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below pin the double-precision instantiations used by the simulator and
//! the training loops.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod cli;
pub mod distill;
pub mod env;
pub mod error;
pub mod flow;
pub mod fsio;
pub mod metrics;
pub mod motion;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Actuator constants in double precision.
pub type Actuator = actuation::ActuatorParams<f64>;
/// PD gains in double precision.
pub type Gains = actuation::PDGains<f64>;
/// The velocity-field network used for training and deployment.
pub type FlowNet = flow::VelocityField<f64>;
/// Single-precision network, e.g. for export or inference-only use.
pub type FlowNetF32 = flow::VelocityField<f32>;
/// Adam state matching [`FlowNet`].
pub type FlowAdam = flow::Adam<f64>;
/// Motion complexity report in double precision.
pub type Complexity = metrics::ComplexityScores<f64>;
/// Tracking metrics in double precision.
pub type Tracking = metrics::TrackingMetrics<f64>;
