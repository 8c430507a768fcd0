//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("empty sample")]
    EmptySample,

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("rank deficiency at input {index}: residual norm {residual:.3e}")]
    RankDeficient { index: usize, residual: f64 },

    #[error("eigenvalue {0:.3e} below the negativity tolerance")]
    NegativeEigenvalue(f64),

    #[error("invalid depth spec: {0}")]
    InvalidSpec(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate scaling: {0}")]
    DegenerateScaling(String),

    #[error("truncation level out of range: {0}")]
    Rank(String),

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("divergent series: {0}")]
    DivergentSeries(String),
}
