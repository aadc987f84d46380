//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid indexing, generation, planning and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A world point fell outside the grid volume.
    #[error("world point ({0}, {1}, {2}) is outside the grid bounds")]
    OutOfBounds(f64, f64, f64),

    /// A voxel index fell outside the grid dimensions.
    #[error("voxel index ({0}, {1}, {2}) is outside the grid dimensions")]
    OutOfBoundsIndex(u32, u32, u32),

    /// Generation parameters that can never produce a valid artifact.
    #[error("infeasible parameters: {0}")]
    ParamsInfeasible(String),

    /// Task sampling exhausted its rejection budget.
    #[error("no feasible task found after {attempts} rejections")]
    NoFeasibleTask { attempts: u32 },

    /// The goal is unreachable in the current belief map.
    #[error("no path from start to goal in the belief map")]
    NoPath,

    /// A controller that requires a plan was invoked without one.
    #[error("no trajectory available for the requested controller")]
    NoTrajectory,

    /// Aggregation over an empty result set.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
