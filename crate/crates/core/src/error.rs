use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular cubic: discriminant of f is zero")]
    SingularCubic,

    #[error("bad prime {0}: supply override in bad_prime_traces")]
    BadPrime(u64),

    #[error("missing trace for bad prime {0}")]
    MissingBadTrace(u64),

    #[error("excluded prime {0}: divides N*disc(f)")]
    ExcludedPrime(u64),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid twist class: {0}")]
    InvalidClass(String),

    #[error("{0} is not an admissible discriminant: {1}")]
    InvalidDiscriminant(i64, String),

    #[error("odd functional equation: central value trivially 0, outside family (d = {0})")]
    OddFunctionalEquation(i64),

    #[error("coefficient table too short: need n_max = {required}, have {available}")]
    TableTooShort { required: u64, available: u64 },

    #[error("n must be odd (got {0})")]
    EvenModulus(u64),

    #[error("outside convergence region: {0}")]
    OutsideConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
