use thiserror::Error;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// The relative position is at the origin, where the bearing is undefined.
    #[error("bearing undefined at zero relative position")]
    ZeroRange,

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    /// Inverse-Wishart degrees of freedom must exceed `m + 1`.
    #[error("degrees of freedom {dof} must exceed {bound}")]
    DegreesOfFreedom { dof: f64, bound: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Every run of an ensemble was excluded by the divergence mask.
    #[error("no surviving runs")]
    NoSurvivors,

    #[error("missing baseline timing for the nonadaptive EKF")]
    MissingBaseline,

    #[error("window holds no residuals")]
    EmptyWindow,
}

pub type Result<T> = core::result::Result<T, Error>;
