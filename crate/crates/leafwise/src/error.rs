use thiserror::Error;

/// Errors shared by every solver in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid solver configuration (bad grid, step not smaller than the
    /// truncation depth, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input function evaluated to a non-finite value.
    #[error("evaluation failure: non-finite value at t = {point}")]
    Eval { point: f64 },

    /// An operation that needs periodic input was handed a non-periodic kind.
    #[error("type error: {0} requires a periodic function kind")]
    NotPeriodic(&'static str),

    /// The coefficient function dropped below the positivity floor.
    #[error("singular coefficient: A({point}) = {value} is below the floor {floor}")]
    SingularCoefficient { point: f64, value: f64, floor: f64 },

    /// A point handed to the annulus charts is not strictly between the
    /// bounding circles.
    #[error("point ({x}, {y}) with radius {radius} is outside the open annulus 1 < r < 2")]
    OutOfAnnulus { x: f64, y: f64, radius: f64 },

    /// An integral curve left the working region before the requested time.
    #[error("trajectory left the working region at t = {exit_time}")]
    Escape { exit_time: f64 },

    /// A cover description is malformed (unknown box id, overlap outside its
    /// charts, missing transition, ...).
    #[error("cover structure error: {0}")]
    Structural(String),

    /// Local data disagrees on an overlap after moving to the common frame;
    /// this is bad input, not a solver failure.
    #[error("incompatible data on overlap {i} <-> {j}: sup |v_i - v_j| = {delta}")]
    IncompatibleOverlap { i: String, j: String, delta: f64 },

    /// A recomputed internal consistency check failed.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
