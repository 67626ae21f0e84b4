use thiserror::Error;

/// Errors surfaced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("rate matrices are identically zero, uniformization rate would be 0")]
    ZeroRate,

    #[error("model is not sorted by decreasing index")]
    UnsortedModel,

    #[error("model is not indexable: {0}")]
    NotIndexable(String),

    #[error("periodic or ill-conditioned model: no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("fixed-point uniqueness violated: {0} self-consistent zones")]
    FixedPointNotUnique(usize),

    #[error("degenerate rate matrix: total event rate is zero")]
    DegenerateRates,

    #[error("configuration space too large: {required} > {bound}")]
    GuardExceeded { required: u64, bound: u64 },

    #[error("relaxation routes disagree: |{lp} - {rho}| > 1e-6")]
    RelaxationMismatch { lp: f64, rho: f64 },

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
