//! Mining regional motion patterns from trajectory collections.
//!
//! Trajectories become flow vectors `(x, y, u, v)`, flow vectors are grouped
//! into motion components by Kmeans, components are linked by a directed
//! reachability relation, and components with similar path-reachability
//! signatures are grouped into motion patterns. Two epochs can be compared
//! to find patterns that emerged or disappeared.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! `*32` aliases name the single-precision variants.

pub mod change_detect;
pub mod components;
pub mod config;
pub mod error;
pub mod flowfield;
pub mod ingest;
pub mod kmeans;
pub mod patterns;
pub mod pipeline;
pub mod reachability;
pub mod render;
mod scalar;
pub mod synthgen;

pub use change_detect::{ChangeReport, PatternDensity};
pub use components::{ComponentModel, MotionComponent};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use flowfield::{FlowField, FlowVector};
pub use ingest::{Dataset, Trajectory, TrajectoryPoint};
pub use patterns::{MotionPattern, PatternSet, Signature};
pub use reachability::{ReachabilityGraph, ReachabilityParams};
pub use render::RenderSpec;
pub use scalar::{heading_degrees, wrap_degrees, Scalar};

pub type Dataset32 = Dataset<f32>;
pub type FlowField32 = FlowField<f32>;
pub type ComponentModel32 = ComponentModel<f32>;
pub type ReachabilityGraph32 = ReachabilityGraph<f32>;
pub type PatternSet32 = PatternSet<f32>;
pub type RunConfig32 = RunConfig<f32>;
pub type ChangeReport32 = ChangeReport<f32>;
