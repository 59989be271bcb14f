//! Dense oracles and state helpers shared by the integration tests.
#![allow(dead_code)]

use mpdoa::array::{truncated_kernel, GridDecomposition};
use mpdoa::mp::{initialize, AlgoConfig, BeliefState, EdgeState, PassOptions};
use mpdoa::Complex64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every quantity is held fixed: only source and message updates run.
pub const FROZEN: PassOptions = PassOptions { learn_kernel: false, learn_gamma: false, learn_noise: false };

pub fn random_y(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Dense `M × M` matrix whose column `m'` is the slot's kernel taps placed on
/// their observation rows.
pub fn dense_a(grid: &GridDecomposition, g: &[Complex64]) -> DMatrix<Complex64> {
    let (m, l) = (grid.m(), grid.l());
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for slot in 0..l {
            a[(grid.row_of(i, slot), i)] += g[i * l + slot];
        }
    }
    a
}

/// Posterior mean and covariance of `s` for `y = A s + n`, `s ~ CN(0, Γ⁻¹)`,
/// `n ~ CN(0, λ⁻¹ I)`.
pub fn dense_posterior(a: &DMatrix<Complex64>, y: &[Complex64], gamma: &[f64], lambda: f64) -> (DVector<Complex64>, DMatrix<Complex64>) {
    let ah = a.adjoint();
    let mut precision = &ah * a * Complex64::new(lambda, 0.0);
    for (i, g) in gamma.iter().enumerate() {
        precision[(i, i)] += Complex64::new(*g, 0.0);
    }
    let cov = precision.try_inverse().expect("posterior precision is invertible");
    let mean = &cov * (&ah * DVector::from_column_slice(y)) * Complex64::new(lambda, 0.0);
    (mean, cov)
}

/// State with a known kernel for every slot, fixed precisions and noise,
/// and backward messages primed from the prior beliefs.
pub fn known_kernel_state(grid: &GridDecomposition, alpha: f64, gamma: &[f64], lambda: f64, cfg: &AlgoConfig) -> (EdgeState, BeliefState, Vec<Complex64>) {
    let (mut edges, mut beliefs) = initialize(grid, 1, cfg);
    let taps = truncated_kernel(alpha, grid).values;
    let g: Vec<Complex64> = (0..grid.m()).flat_map(|_| taps.iter().copied()).collect();
    beliefs.g_hat.copy_from_slice(&g);
    beliefs.g_var.iter_mut().for_each(|v| *v = 0.0);
    beliefs.gamma.copy_from_slice(gamma);
    for (i, v) in beliefs.s_var.iter_mut().enumerate() {
        *v = 1.0 / gamma[i];
    }
    beliefs.lambda = lambda;
    edges.prime_from_beliefs(grid, &beliefs, cfg);
    (edges, beliefs, g)
}

pub fn all_variances(e: &EdgeState, b: &BeliefState) -> Vec<f64> {
    [
        &e.x_fwd_var, &e.x_bwd_var, &e.s_fwd_var, &e.s_prod_var, &e.g_fwd_var, &e.g_agg_var,
        &e.alpha_fwd_var, &e.alpha_bwd_var, &e.g_bwd_var, &e.s_bwd_var, &e.gx_bwd_var,
        &b.s_var, &b.alpha_var, &b.h_var,
    ]
    .iter()
    .flat_map(|v| v.iter().copied())
    .collect()
}
