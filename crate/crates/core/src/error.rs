use thiserror::Error;

use crate::arithmetic::KSearchResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not skew-Hermitian (defect {0:.3e})")]
    NotSkewHermitian(f64),
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("empty generator list")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("no k <= {k_max} satisfies the angle constraints (best k = {best_k}, deviation {best_deviation:.3e})", k_max = .0.k_max, best_k = .0.best.k, best_deviation = .0.best.max_deviation())]
    KNotFound(Box<KNotFound>),
    #[error("no power p <= {p_max} brings U^(p+1) within {epsilon:.3e} of identity (best p = {best_p}, distance {best_distance:.3e})")]
    PowerNotFound {
        p_max: u64,
        epsilon: f64,
        best_p: u64,
        best_distance: f64,
    },
    #[error("m = {0} is not a valid subspace cutoff (needs twin primes (m-1, m+1) or m+1 = 2q with q an odd prime)")]
    InvalidSubspace(u64),
    #[error("cannot isolate {0} with the available sign flips")]
    NotIsolable(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Diagnostic payload for a failed k-search.
#[derive(Debug, Clone)]
pub struct KNotFound {
    pub k_max: u64,
    pub best: KSearchResult,
}

impl Error {
    /// True for honest search/budget failures, as opposed to bad input.
    pub fn is_exhaustion(&self) -> bool {
        matches!(
            self,
            Error::KNotFound(_) | Error::PowerNotFound { .. } | Error::BudgetExhausted(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
