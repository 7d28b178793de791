use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    Index(String),

    #[error("vector is not normalized (norm {norm})")]
    Normalization { norm: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular (min eigenvalue {min_eigenvalue}, threshold {threshold})")]
    Singular { min_eigenvalue: f64, threshold: f64 },

    #[error("matrix is not Hermitian (relative residual {residual})")]
    NotHermitian { residual: f64 },

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("state is not PPT: {0}")]
    NotPpt(String),

    #[error("canonical structure violated: {0}")]
    StructureViolation(String),

    #[error("generators do not form a commuting normal family (residual {residual})")]
    CommutatorViolation { residual: f64 },

    #[error("joint eigenbasis could not be resolved (off-diagonal residual {residual})")]
    DegeneracyUnresolved { residual: f64 },

    #[error("no product witness with a full-rank sandwich was found")]
    NoWitness,

    #[error("ensemble failed certification (residual {residual}, tolerance {tol})")]
    CertificationFailure { residual: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable name used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Index(_) => "IndexError",
            Error::Normalization { .. } => "NormalizationError",
            Error::NotPsd { .. } => "NotPsdError",
            Error::Singular { .. } => "SingularError",
            Error::NotHermitian { .. } => "NotHermitianError",
            Error::RankMismatch(_) => "RankMismatch",
            Error::NotPpt(_) => "NotPptError",
            Error::StructureViolation(_) => "StructureViolation",
            Error::CommutatorViolation { .. } => "CommutatorViolation",
            Error::DegeneracyUnresolved { .. } => "DegeneracyUnresolved",
            Error::NoWitness => "NoWitness",
            Error::CertificationFailure { .. } => "CertificationFailure",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Precondition(_) => "PreconditionError",
            Error::InvalidState(_) => "InvalidState",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for errors meaning the input does not meet the decomposition preconditions.
    pub fn is_precondition_failure(&self) -> bool {
        matches!(
            self,
            Error::NoWitness
                | Error::RankMismatch(_)
                | Error::StructureViolation(_)
                | Error::CertificationFailure { .. }
                | Error::NotPpt(_)
                | Error::CommutatorViolation { .. }
                | Error::DegeneracyUnresolved { .. }
                | Error::Singular { .. }
        )
    }
}
