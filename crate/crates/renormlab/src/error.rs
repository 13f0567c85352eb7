//! Error type shared by all modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the toolkit.
///
/// Numerical routines distinguish caller mistakes ([`Error::InvalidInput`],
/// [`Error::Domain`]) from mathematically meaningful negative answers
/// ([`Error::NotRenormalizable`], [`Error::NoPreimage`]) and from genuine
/// solver failures ([`Error::SolverFailed`], [`Error::CapExceeded`]).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Argument outside the domain of the evaluated map.
    #[error("domain violation: {0}")]
    Domain(String),
    /// Evaluation requested exactly at the critical point.
    #[error("the map is undefined at its critical point")]
    CriticalPoint,
    /// An orbit landed on (or indistinguishably close to) the critical point.
    #[error("orbit hit the critical point at step {step}")]
    HitCritical { step: usize },
    /// The requested inverse branch does not contain the target value.
    #[error("no preimage on the requested branch: {0}")]
    NoPreimage(String),
    /// Renormalization of the requested type does not exist for this map.
    #[error("not renormalizable: {0}")]
    NotRenormalizable(String),
    /// An orbit violated the symbolic word required by the construction.
    #[error("word violation at step {step}: {detail}")]
    WordViolation { step: usize, detail: String },
    /// An iterative solver diverged or exhausted its budget.
    #[error("solver failed: {0}")]
    SolverFailed(String),
    /// An iteration cap was reached before the sought event occurred.
    #[error("iteration cap exceeded after {steps} steps: {detail}")]
    CapExceeded { steps: usize, detail: String },
    /// Structurally invalid input (bad parameter ranges, mismatched sizes).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A cover or graph invariant that must hold by construction failed.
    #[error("cover construction violated an invariant: {0}")]
    CoverBug(String),
    /// Not enough data to produce the requested estimate.
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

impl Error {
    /// Stable machine-readable tag for each error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::CriticalPoint => "critical-point",
            Error::HitCritical { .. } => "hit-critical",
            Error::NoPreimage(_) => "no-preimage",
            Error::NotRenormalizable(_) => "not-renormalizable",
            Error::WordViolation { .. } => "word-violation",
            Error::SolverFailed(_) => "solver-failed",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::InvalidInput(_) => "invalid-input",
            Error::CoverBug(_) => "cover-bug",
            Error::Insufficient(_) => "insufficient-data",
        }
    }

    /// True for errors caused by malformed input rather than failed analysis.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}
