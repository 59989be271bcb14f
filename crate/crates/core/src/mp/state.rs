//! Message and belief storage for the factor graph.
//!
//! Index layouts (all flat, 0-based):
//! - row edges `(t, r, l)`: the `l`-th contribution `x_{r,l}(t)` arriving at
//!   observation row `r`, sourced from grid slot `grid_of(r, l)`;
//! - grid edges `(t, m', l)`: the same edge seen from grid slot `m'`, living
//!   on row `row_of(m', l)`;
//! - kernel entries `(m', l)`: shared by all snapshots;
//! - nodes `(t, m')` and rows `(t, r)`.

use super::AlgoConfig;
use crate::array::GridDecomposition;
use crate::Complex64;

/// Problem sizes plus index helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub l: usize,
    pub t: usize,
}

impl Dims {
    #[inline]
    pub fn edge(&self, t: usize, i: usize, l: usize) -> usize {
        (t * self.m + i) * self.l + l
    }

    #[inline]
    pub fn node(&self, t: usize, i: usize) -> usize {
        t * self.m + i
    }

    #[inline]
    pub fn kernel(&self, i: usize, l: usize) -> usize {
        i * self.l + l
    }

    pub fn edges(&self) -> usize {
        self.m * self.l * self.t
    }

    pub fn nodes(&self) -> usize {
        self.m * self.t
    }

    pub fn kernels(&self) -> usize {
        self.m * self.l
    }
}

/// All Gaussian messages on the graph edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    pub dims: Dims,
    /// Row edges: extrinsic observation-to-x messages.
    pub x_fwd: Vec<Complex64>,
    pub x_fwd_var: Vec<f64>,
    /// Row edges: x messages from the product factor back to the observation.
    pub x_bwd: Vec<Complex64>,
    pub x_bwd_var: Vec<f64>,
    /// Rows: `p̂` and `v_p`, sums of the backward x-messages.
    pub p_hat: Vec<Complex64>,
    pub p_var: Vec<f64>,
    /// Grid edges: x-factor to source messages.
    pub s_fwd: Vec<Complex64>,
    pub s_fwd_var: Vec<f64>,
    /// Nodes: product of the incoming source messages.
    pub s_prod: Vec<Complex64>,
    pub s_prod_var: Vec<f64>,
    /// Grid edges: x-factor to kernel messages.
    pub g_fwd: Vec<Complex64>,
    pub g_fwd_var: Vec<f64>,
    /// Kernel entries: product of the kernel messages over snapshots.
    pub g_agg: Vec<Complex64>,
    pub g_agg_var: Vec<f64>,
    /// Kernel entries: kernel value and α-slope at the linearization point.
    pub lin_value: Vec<Complex64>,
    pub lin_slope: Vec<Complex64>,
    /// Kernel entries: kernel-factor to α messages.
    pub alpha_fwd: Vec<f64>,
    pub alpha_fwd_var: Vec<f64>,
    /// Kernel entries: α to kernel-factor messages.
    pub alpha_bwd: Vec<f64>,
    pub alpha_bwd_var: Vec<f64>,
    /// Kernel entries: kernel-factor to kernel messages (linearized).
    pub g_bwd: Vec<Complex64>,
    pub g_bwd_var: Vec<f64>,
    /// Grid edges: source to x-factor messages.
    pub s_bwd: Vec<Complex64>,
    pub s_bwd_var: Vec<f64>,
    /// Grid edges: kernel to x-factor messages.
    pub gx_bwd: Vec<Complex64>,
    pub gx_bwd_var: Vec<f64>,
}

/// Posterior beliefs plus global hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub dims: Dims,
    /// Nodes: source beliefs.
    pub s_hat: Vec<Complex64>,
    pub s_var: Vec<f64>,
    /// Grid slots: source precisions.
    pub gamma: Vec<f64>,
    /// Grid slots: fractional offsets, their variances, and the previous
    /// estimate used as the linearization point.
    pub alpha: Vec<f64>,
    pub alpha_var: Vec<f64>,
    pub alpha_prev: Vec<f64>,
    /// Kernel entries.
    pub g_hat: Vec<Complex64>,
    pub g_var: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    /// Rows: noiseless-observation beliefs.
    pub h_hat: Vec<Complex64>,
    pub h_var: Vec<f64>,
    /// Completed iterations.
    pub iteration: usize,
}

/// Starting point: `ε = ε₀`, `λ̂ = λ₀`, `x← = 0`, `v← = 1`, `ĝ = 1`, `ŝ = 0`,
/// `v_s = 1`, `α̂ = 0`.
///
/// The source precisions are first needed before their own update, so they
/// start at the value the precision update gives for `ŝ = 0`, `v = 1`:
/// `(ε₀ + T) / (η + T)`.
pub fn initialize(grid: &GridDecomposition, t: usize, config: &AlgoConfig) -> (EdgeState, BeliefState) {
    let dims = Dims { m: grid.m(), l: grid.l(), t };
    let zero = Complex64::default();
    let one = Complex64::new(1.0, 0.0);
    let (ne, nn, nk, nr) = (dims.edges(), dims.nodes(), dims.kernels(), dims.nodes());
    let lf = dims.l as f64;

    let edges = EdgeState {
        dims,
        x_fwd: vec![zero; ne],
        x_fwd_var: vec![1.0; ne],
        x_bwd: vec![zero; ne],
        x_bwd_var: vec![1.0; ne],
        p_hat: vec![zero; nr],
        p_var: vec![lf; nr],
        s_fwd: vec![zero; ne],
        s_fwd_var: vec![1.0; ne],
        s_prod: vec![zero; nn],
        s_prod_var: vec![1.0; nn],
        g_fwd: vec![zero; ne],
        g_fwd_var: vec![1.0; ne],
        g_agg: vec![one; nk],
        g_agg_var: vec![1.0; nk],
        lin_value: vec![zero; nk],
        lin_slope: vec![zero; nk],
        alpha_fwd: vec![0.0; nk],
        alpha_fwd_var: vec![config.var_cap; nk],
        alpha_bwd: vec![0.0; nk],
        alpha_bwd_var: vec![config.var_cap; nk],
        g_bwd: vec![one; nk],
        g_bwd_var: vec![1.0; nk],
        s_bwd: vec![zero; ne],
        s_bwd_var: vec![1.0; ne],
        gx_bwd: vec![one; ne],
        gx_bwd_var: vec![1.0; ne],
    };
    let tf = t as f64;
    let gamma0 = (config.epsilon_init + tf) / (config.eta + tf);
    let beliefs = BeliefState {
        dims,
        s_hat: vec![zero; nn],
        s_var: vec![1.0; nn],
        gamma: vec![gamma0; dims.m],
        alpha: vec![0.0; dims.m],
        alpha_var: vec![config.var_cap; dims.m],
        alpha_prev: vec![0.0; dims.m],
        g_hat: vec![one; nk],
        g_var: vec![1.0; nk],
        lambda: config.lambda_init,
        epsilon: config.epsilon_init,
        h_hat: vec![zero; nr],
        h_var: vec![1.0; nr],
        iteration: 0,
    };
    (edges, beliefs)
}

impl BeliefState {
    /// `(1/T) Σ_t |ŝ|²` per grid slot.
    pub fn signal_power(&self) -> Vec<f64> {
        let Dims { m, t, .. } = self.dims;
        (0..m)
            .map(|i| (0..t).map(|tt| self.s_hat[tt * m + i].norm_sqr()).sum::<f64>() / t as f64)
            .collect()
    }

    /// `(1/T) Σ_t (|ŝ|² + v_s)` per grid slot.
    pub fn mean_power(&self) -> Vec<f64> {
        let Dims { m, t, .. } = self.dims;
        (0..m)
            .map(|i| {
                (0..t)
                    .map(|tt| self.s_hat[tt * m + i].norm_sqr() + self.s_var[tt * m + i])
                    .sum::<f64>()
                    / t as f64
            })
            .collect()
    }
}

impl EdgeState {
    /// Sets the backward x-messages to `ĝ ŝ` with variance `|ĝ|² v_s`, the
    /// messages implied by the current beliefs when the kernel is known.
    pub fn prime_from_beliefs(&mut self, grid: &GridDecomposition, beliefs: &BeliefState, config: &AlgoConfig) {
        let d = self.dims;
        for t in 0..d.t {
            for i in 0..d.m {
                let n = d.node(t, i);
                for l in 0..d.l {
                    let k = d.kernel(i, l);
                    let e = d.edge(t, grid.row_of(i, l), l);
                    self.x_bwd[e] = beliefs.g_hat[k] * beliefs.s_hat[n];
                    self.x_bwd_var[e] = (beliefs.g_hat[k].norm_sqr() * beliefs.s_var[n])
                        .clamp(config.var_floor, config.var_cap);
                }
            }
        }
        super::passes::sum_backward_messages(self);
    }
}
