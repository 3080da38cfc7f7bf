use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The inputs are individually valid but violate an operation's contract,
    /// e.g. a symmetric LDGM step on a non-Poisson variable profile.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Bisection found convergence above a point where convergence failed.
    #[error("non-monotone convergence: converged at {converged} but not at {failed}")]
    NonMonotone { converged: f64, failed: f64 },

    /// A fully resolved constraint does not sum to its right-hand side.
    /// Erasure decoding cannot produce this, so it always signals a bug.
    #[error("peeling produced an inconsistent constraint {constraint}")]
    InconsistentPeel { constraint: usize },

    #[error("malformed ensemble description: {0}")]
    Format(#[from] serde_json::Error),
}
