//! Deterministic simulation library and benchmark harness for
//! trajectory-constrained active gaze control.
//!
//! A holonomic base executes receding-horizon plans through unknown and
//! dynamic voxelised environments while a pan/tilt head camera decides,
//! every decision step, where to look. The optimised controller greedily
//! maximises a tiered per-voxel reward that couples observation of the
//! planned swept volume with exploration of stale space; three heuristic
//! baselines (fixed, panning, trajectory look-ahead) run under identical
//! conditions for comparison.

pub mod bench;
pub mod config;
pub mod error;
pub mod gaze;
pub mod planner;
pub mod sensing;
pub mod voxel;
pub mod world;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use gaze::ControllerKind;
