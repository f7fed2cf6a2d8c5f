//! Sparse optical-flow trajectories as an appearance-free motion representation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`flow::estimate_flow`] computes dense flow between consecutive frames
//!    (coarse-to-fine Horn–Schunck), or flow is loaded from Middlebury `.flo`.
//! 2. [`sampler`] builds a jittered candidate grid and draws keypoints with
//!    probability proportional to the first-frame flow magnitude.
//! 3. [`tracker::propagate`] integrates the flow at each keypoint's sub-pixel
//!    position into a trajectory.
//! 4. [`conditioning`] stamps per-frame displacements into sparse flow maps and
//!    smooths them with a normalized Gaussian kernel.
//!
//! [`synthetic`] renders scenes with analytically known flow and tracks, and
//! [`eval`] scores every stage against those oracles.
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64` or `f32`.

pub mod conditioning;
pub mod error;
pub mod eval;
pub mod flow;
pub mod frame;
pub mod rng;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Frame64 = frame::Frame<f64>;
pub type Frame32 = frame::Frame<f32>;
pub type FlowField64 = flow::FlowField<f64>;
pub type FlowField32 = flow::FlowField<f32>;
pub type FlowParams64 = flow::FlowParams<f64>;
pub type FlowParams32 = flow::FlowParams<f32>;
pub type TrajectorySet64 = tracker::TrajectorySet<f64>;
pub type TrajectorySet32 = tracker::TrajectorySet<f32>;
pub type SparseFlowMap64 = conditioning::SparseFlowMap<f64>;
pub type SparseFlowMap32 = conditioning::SparseFlowMap<f32>;
pub type GaussianKernel64 = conditioning::GaussianKernel<f64>;
pub type GaussianKernel32 = conditioning::GaussianKernel<f32>;
