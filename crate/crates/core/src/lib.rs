//! Spatially consistent millimeter-wave channel simulation along drive routes.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: positions, routes, update ticks and the grid of cells.
//! - [`field`]: seedable spatially correlated Gaussian/uniform fields.
//! - [`large_scale`]: LOS probability and state, grid-constant parameters,
//!   shadow fading and close-in path loss.
//! - [`channel`]: cluster birth/death and time-variant small-scale evolution.
//! - [`pdp`]: measurement-style power delay profile analysis.
//! - [`sim`]: run configuration, drives, Monte Carlo batches and artifacts.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod field;
pub mod geometry;
pub mod large_scale;
pub mod pdp;
pub mod sim;

pub use channel::{ChannelState, Cir, CirTap, ClusterEvent, Drive, Route, SmallScaleConfig, StepOutput, TimeCluster};
pub use error::{Error, Result};
pub use field::{CorrelatedFieldSpec, FieldSample};
pub use geometry::{GridIndex, Position, Trajectory, UpdateTick};
pub use large_scale::{FieldSet, LargeScaleParams, LosMode, LosState, ScenarioConfig};

pub use pdp::{DirectionalPdp, Pdp, RouteSeries};
