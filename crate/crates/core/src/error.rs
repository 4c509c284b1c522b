use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Evaluation hit a pole or produced a non-finite intermediate value.
    #[error("pole or non-finite value in component {component}")]
    Pole { component: usize },

    #[error(
        "rank decision is ambiguous: singular value ratio {ratio:e} lies in the tolerance band"
    )]
    AmbiguousRank { ratio: f64 },

    #[error("size budget exceeded: {what} reached {size} (limit {limit})")]
    BudgetExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("ad of basis element {index} is not nilpotent within {dim} steps")]
    NotNilpotent { index: usize, dim: usize },

    #[error("invalid KR word `{input}`: {reason}")]
    InvalidWord { input: String, reason: String },

    #[error("stage {stage}: {which} vanishes at the base point ({value:e})")]
    DegenerateStage {
        stage: usize,
        which: &'static str,
        value: f64,
    },

    #[error("singular coordinate y{index} must be zero, got {value}")]
    NonzeroSingularCoordinate { index: usize, value: f64 },

    #[error("configuration outside the conversion domain: {0}")]
    OutsideDomain(String),

    #[error(
        "initial and terminal configurations lie in different windows ({initial} vs {terminal})"
    )]
    WindowMismatch { initial: i64, terminal: i64 },

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("abnormal direction: the u2 amplitude q4 - p4 is zero")]
    AbnormalDirection,

    #[error("system is not triangular: component {component} depends on x{var}")]
    NotTriangular { component: usize, var: usize },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error JSON and FFI status mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Pole { .. } => "pole",
            Error::AmbiguousRank { .. } => "ambiguous_rank",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NotNilpotent { .. } => "not_nilpotent",
            Error::InvalidWord { .. } => "invalid_word",
            Error::DegenerateStage { .. } => "degenerate_stage",
            Error::NonzeroSingularCoordinate { .. } => "nonzero_singular_coordinate",
            Error::OutsideDomain(_) => "outside_domain",
            Error::WindowMismatch { .. } => "window_mismatch",
            Error::Unreachable(_) => "unreachable",
            Error::AbnormalDirection => "abnormal_direction",
            Error::NotTriangular { .. } => "not_triangular",
            Error::NonFinite { .. } => "non_finite",
            Error::VerificationFailed(_) => "verification_failed",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
