//! Direction-of-arrival estimation for large uniform linear arrays by
//! block-sparse recovery in the inverse-DFT domain.
//!
//! After a unitary inverse DFT, the array response of a source at angle θ
//! collapses onto a handful of adjacent bins around `w = round(M/2 · sin θ)`,
//! weighted by a truncated Dirichlet kernel that depends only on the
//! fractional offset `α`. Stacking one such block per candidate bin gives a
//! linear model `Y = V X + N` with a 0/1 sensing matrix `V` holding a single
//! nonzero per column. [`mp`] runs a hybrid belief-propagation / mean-field
//! estimator on the factor graph of that model at `O(L·M·T)` per iteration.
//!
//! Module map:
//! - [`array`]: steering vectors, `(w, α)` decomposition, unitary DFT,
//!   Dirichlet kernel and the implicit sensing structure.
//! - [`sim`]: scenario and snapshot generation, snapshot file container.
//! - [`mp`]: the message-passing estimator.
//! - [`baselines`]: two-stage DFT, grid ML and the Cramér–Rao bound.
//! - [`metrics`]: assignment-based MSE and aggregation.
//! - [`harness`]: Monte-Carlo sweeps producing CSV records.

pub mod array;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod metrics;
mod peaks;
pub mod mp;
pub mod sim;

pub use error::{DoaError, Result};
pub use num_complex::Complex64;

/// Source estimate shared by every estimation method.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SourceEstimate {
    /// Estimated angle in radians.
    pub theta: f64,
    /// Grid slot `m'` (0-based), so that `w = m' - M/2`.
    pub grid_index: usize,
    pub w: i64,
    pub alpha: f64,
    /// Mean posterior power (or spectrum power for the baselines).
    pub power: f64,
}

/// Output of any estimator: up to `K` sources sorted by decreasing power.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DoaEstimate {
    pub sources: Vec<SourceEstimate>,
    pub iterations: usize,
    pub converged: bool,
    /// Fewer than the requested number of separable peaks were found.
    pub shortfall: bool,
}

impl DoaEstimate {
    pub fn thetas(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.theta).collect()
    }
}
