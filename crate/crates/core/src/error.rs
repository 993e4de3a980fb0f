use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible domain ({domain})")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("derivative of the extra pressure is singular at alpha = {alpha} (r < 1)")]
    Singularity { alpha: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no base state: f(alpha) has no sign change on the scan interval")]
    NoRoot,

    #[error("banded system is numerically singular at row {row} (pivot ratio {condition_estimate:.3e})")]
    SingularSystem { row: usize, condition_estimate: f64 },

    #[error("degenerate rate-fit window: {0}")]
    DegenerateWindow(String),

    #[error("far-field closure unresolved: doubling x_max changed the interior by {relative_change:.3e}")]
    ClosureUnresolved { relative_change: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}
