use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate resolution: {0}")]
    DegenerateResolution(String),
    #[error("ill-conditioned metric at the evaluation point (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("vertex count {count} exceeds oracle cap {cap}")]
    CapExceeded { count: usize, cap: usize },
    #[error("surface is totally geodesic; the skin distance is +inf everywhere")]
    TotallyGeodesic,
    #[error("surface has no singular set")]
    RegularSurface,
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("cover does not cover vertex {0}")]
    NotCovering(usize),
    #[error("no admissible replacement for center {center} (conflicts with {other}) within budget")]
    NoAdmissibleMove { center: usize, other: usize },
    #[error("empty vertex set: {0}")]
    Empty(String),
    #[error("disconnected: {0}")]
    Disconnected(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("inclusion failed: {0}")]
    InclusionFailed(String),
    #[error("malformed surface: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
