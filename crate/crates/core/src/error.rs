use thiserror::Error;

use crate::space::Point;

/// Errors raised by the coarse, compactification and operator routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "enumerating ball of radius {radius} around {center} exceeds the budget of {budget} points"
    )]
    Properness {
        center: Point,
        radius: f64,
        budget: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("quadrature validation failed: {0}")]
    Quadrature(String),

    #[error(
        "no interior witness for boundary net point ({level}, {index}) within {budget} candidates"
    )]
    Density {
        level: usize,
        index: usize,
        budget: usize,
    },

    #[error("boundary net at level {level} does not cover the point {point:?}")]
    NetCoverage { level: usize, point: Vec<f64> },

    #[error("partition cell {cell} based at {base} has a support square outside the entourage, witness ({}, {})", witness.0, witness.1)]
    PartitionCell {
        cell: usize,
        base: Point,
        witness: (Point, Point),
    },

    #[error("kernel measure at {point} has {size} atoms, above the cap of {cap}")]
    SupportTooLarge {
        point: Point,
        size: usize,
        cap: usize,
    },

    #[error("symbol band {band} exceeds a quarter of the matrix size {size}")]
    BandTooLarge { band: usize, size: usize },

    #[error(
        "ramp schedule exhausted at stage {stage}; best commutator norms reached {achieved:?}"
    )]
    ScheduleExhausted { stage: usize, achieved: Vec<f64> },

    #[error("window at offset {offset} of size {size} does not fit in a matrix of size {dim}")]
    WindowOutOfRange {
        offset: usize,
        size: usize,
        dim: usize,
    },

    #[error("unknown instance key `{0}`")]
    UnknownInstance(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
