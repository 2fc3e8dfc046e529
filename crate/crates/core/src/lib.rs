//! Visibility-driven surveillance and exploration on level-set maps.
//!
//! Environments are embedded as signed-distance level sets `phi` on uniform
//! 2D or 3D grids (`phi > 0` is free space). From a vantage point the
//! visibility level set is the minimum of `phi` along the line of sight;
//! cumulative visibility is the pointwise maximum over all vantages taken so
//! far. The exact information gain of a candidate vantage is the volume it
//! would newly reveal, and the planner picks vantages greedily by that gain
//! (or by a random or external estimator).
//!
//! Module map:
//!
//! - [`grid`]: geometry, scalar fields, interpolation, smeared delta and
//!   Heaviside, exact signed distance embedding of binary masks.
//! - [`visibility`]: per-vantage visibility, cumulative state, shadow
//!   boundaries and the residual metric.
//! - [`gain`]: exact gain at a point and over the whole grid.
//! - [`planner`]: the greedy loop, stop rules, estimators, frequency maps.
//! - [`scenes`]: image and polygon ingestion, scene synthesis, art-gallery
//!   bounds.
//! - [`dataset`]: the RFA field format, training pairs and dataset runs.

pub mod dataset;
pub mod error;
pub mod gain;
pub mod grid;
pub mod planner;
pub mod scenes;
pub mod visibility;

pub(crate) mod raycast;

pub use error::{Error, Result};
pub use gain::{exact_gain_at, exact_gain_field, GainField, GainMode};
pub use grid::{GridGeometry, Mask, OccupancyMap, ScalarField};
pub use planner::{run_episode, GainEstimator, PlanTrace, StopReason, StopRule};
pub use visibility::{ExplorationState, Vantage};
