use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("matrix is rank deficient: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("measure is not definite: gamma_{index} is singular")]
    NotDefinite { index: usize },
    #[error("rank mismatch: <P,P> has rank {found}, expected {expected}")]
    RankMismatch { found: usize, expected: usize },
    #[error("measure is not in the class M_(k,N): {0}")]
    NotInClass(String),
    #[error("total mass is singular")]
    SingularTotalMass,
    #[error("Toda normalizer S(t) is numerically singular")]
    SingularNormalizer,
    #[error("banded structure violated: {0}")]
    Structure(String),
    #[error("block Lanczos start block has rank zero")]
    RankZeroStart,
    #[error("reductions are incomparable: Lanczos terminated early at step {0}")]
    Incomparable(usize),
    #[error("ill-conditioned flow: {0}")]
    Conditioning(String),
    #[error("RK4 step too large: Hermiticity drift {0:.3e}")]
    StepSizeTooLarge(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    /// True for errors that describe input that fails a structural or class check,
    /// as opposed to a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::Structure(_)
                | Error::NotInClass(_)
                | Error::Parse(_)
                | Error::Schema(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
