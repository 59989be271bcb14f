//! Hybrid belief-propagation / mean-field estimator for the block-sparse
//! inverse-DFT model `Y = V X + N`, `x_{m',l}(t) = s'_{m'}(t) g_{l,m'}`.
//!
//! Priors: `s'_{m'}(t) ~ CN(0, 1/γ_{m'})` with precisions shared across
//! snapshots and `γ ~ Gamma(ε, η)`; `g_{l,m'} = k(δ_l, α_{m'})` with
//! `α ~ U[-0.5, 0.5)`; noise precision `λ` with a Jeffreys prior.
//!
//! Each iteration runs a forward recursion (observation rows → x edges →
//! sources → kernel taps → offsets) and a backward recursion (precisions,
//! ε retune, extrinsic source/offset/kernel messages → x edges → noise
//! precision). Messages from the previous round are reused where the
//! schedule needs them before they are recomputed. Per-iteration work is
//! `O(L·M·T)`.

mod config;
mod gaussian;
mod passes;
mod run;
mod state;

pub use config::{AlgoConfig, PassOptions};
pub use gaussian::gaussian_extrinsic;
pub use passes::{
    backward_pass, backward_pass_with, forward_pass, forward_pass_with, retune_epsilon,
    update_gamma, update_lambda,
};
pub use run::{extract_doas, run, write_beliefs_csv, write_trace_csv, RunResult, TraceRow};
pub use state::{initialize, BeliefState, Dims, EdgeState};

pub use crate::array::kernel_derivative;

use crate::array::build_grid;
use crate::sim::SnapshotSet;
use crate::{DoaEstimate, Result};

/// Runs the estimator on a snapshot set and extracts `k` sources.
pub fn estimate(set: &SnapshotSet, k: usize, l: usize, config: &AlgoConfig) -> Result<(DoaEstimate, RunResult)> {
    let grid = build_grid(set.m, l)?;
    let result = run(&set.y, &grid, config)?;
    let est = result.doas(k, &grid)?;
    Ok((est, result))
}
