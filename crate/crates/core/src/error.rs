use thiserror::Error;

/// Errors raised by the closed-form and oracle computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator Pochhammer symbol vanishes at term {term}")]
    DenominatorPole { term: usize },

    #[error("recurrence coefficient at n = {n} has a vanishing denominator")]
    SingularCoefficient { n: usize },

    #[error("vanishing denominator in {what} at n = {n}")]
    SingularDenominator { what: &'static str, n: usize },

    #[error("N = {n} has the wrong parity for the {expected} family")]
    BadParity { n: usize, expected: &'static str },

    #[error("parameter {name} must be nonnegative, got {value}")]
    NegativeParameter { name: &'static str, value: String },

    #[error("truncation condition violated: {0}")]
    TruncationViolation(String),

    #[error("eigenvalue gap {gap} is below the degeneracy guard")]
    DegenerateSpectrum { gap: String },

    #[error("eigenspace has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spectrum mismatch: eigenvalue {eigenvalue} ({detail})")]
    SpectrumMismatch { eigenvalue: String, detail: String },

    #[error("operator identity {identity} violated, residual {residual}")]
    IdentityViolation { identity: &'static str, residual: String },

    #[error("{operator} is not irreducible tridiagonal in the {basis} eigenbasis ({detail})")]
    NotIrreducible {
        operator: &'static str,
        basis: &'static str,
        detail: String,
    },

    #[error("operator does not preserve the total level {level}")]
    LevelNotPreserved { level: usize },

    #[error("eigen-solve did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("oracle results disagree across precisions by {deviation}")]
    PrecisionLoss { deviation: String },

    #[error("invalid number {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
