use thiserror::Error;

/// Failures surfaced by the numerical kernels and selectors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not numerically positive definite (pivot {pivot:.3e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:.3e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("rank-one downdate would lose positive definiteness (denominator {denominator:.3e})")]
    DowndateSingular { denominator: f64 },

    #[error("weighted Gram matrix X^T diag(pi) X is singular")]
    SingularWeighting,

    #[error("projection radii must be positive (c1 = {c1}, c2 = {c2})")]
    InfeasibleBall { c1: f64, c2: f64 },

    #[error("selection holds {drawn} points, fewer than the {required} needed for least squares")]
    EmptySelection { drawn: usize, required: usize },

    #[error("every candidate removal or exchange makes the selected Gram matrix singular")]
    RankCollapse,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
