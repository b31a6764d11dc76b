//! Ensemble occupancy prediction and uncertainty-driven path selection for
//! exploration and point-goal navigation in 2D indoor grid worlds.
//!
//! The pipeline, per navigation step:
//!
//! 1. [`world`] simulates the agent and returns a range scan.
//! 2. [`mapping`] ground-projects the scan into an egocentric grid and
//!    registers it into probabilistic global maps with per-cell Bayes updates.
//! 3. [`ensemble`] runs every [`predictor`] member on the accumulated
//!    observations, registers each prediction into its own global map and
//!    reduces the member maps to a fused mean map and an uncertainty map.
//! 4. Every few steps [`rrt`] proposes candidate paths and [`policy`] scores
//!    them (mean uncertainty for exploration, an upper-confidence traversability
//!    bound for point-goal) and picks a short-term goal.
//! 5. [`controller`] turns the short-term goal into discrete actions.
//!
//! [`harness`] wires the loop together and [`metrics`] scores the result.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dataset;
pub mod ensemble;
mod error;
pub mod formats;
pub mod geom;
pub mod harness;
pub mod mapping;
pub mod metrics;
pub mod policy;
pub mod predictor;
pub mod rrt;
pub mod world;

pub use error::{Error, Result};
pub use geom::Cell;
