//! Forward and backward recursions of one estimator iteration.
//!
//! Leave-one-out sums at the observation rows are evaluated from prefix and
//! suffix sums rather than as `total - own`; the two agree algebraically but
//! the subtraction loses every digit of a small residual once an
//! uninformative edge carries a variance near `var_cap`.

use super::gaussian::{clamp_var, gaussian_extrinsic};
use super::state::{BeliefState, Dims, EdgeState};
use super::{AlgoConfig, PassOptions};
use crate::array::{centred_kernel_with_derivative, GridDecomposition};
use crate::{Complex64, DoaError, Result};

/// Floor on `|ĝ|²` before dividing by the kernel mean.
const KERNEL_POWER_FLOOR: f64 = 1e-12;

fn check_finite_c(v: &[Complex64], iteration: usize, stage: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(DoaError::NonFinite { iteration, stage })
    }
}

fn check_finite(v: &[f64], iteration: usize, stage: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DoaError::NonFinite { iteration, stage })
    }
}

fn check_dims(y: &[Complex64], grid: &GridDecomposition, d: Dims) -> Result<()> {
    if grid.m() != d.m || grid.l() != d.l {
        return Err(DoaError::Config("grid does not match state dimensions".into()));
    }
    if y.len() != d.m * d.t {
        return Err(DoaError::LengthMismatch { expected: d.m * d.t, got: y.len() });
    }
    Ok(())
}

/// `p̂ = Σ_l x←`, `v_p = Σ_l v←` for every row and snapshot.
pub(crate) fn sum_backward_messages(edges: &mut EdgeState) {
    let d = edges.dims;
    for n in 0..d.nodes() {
        let base = n * d.l;
        edges.p_hat[n] = edges.x_bwd[base..base + d.l].iter().sum();
        edges.p_var[n] = edges.x_bwd_var[base..base + d.l].iter().sum();
    }
}

pub fn forward_pass(
    y: &[Complex64],
    grid: &GridDecomposition,
    edges: &mut EdgeState,
    beliefs: &mut BeliefState,
    config: &AlgoConfig,
) -> Result<()> {
    forward_pass_with(y, grid, edges, beliefs, config, PassOptions::default())
}

pub fn forward_pass_with(
    y: &[Complex64],
    grid: &GridDecomposition,
    edges: &mut EdgeState,
    beliefs: &mut BeliefState,
    config: &AlgoConfig,
    opts: PassOptions,
) -> Result<()> {
    let d = edges.dims;
    check_dims(y, grid, d)?;
    let iter = beliefs.iteration + 1;
    let (floor, cap) = (config.var_floor, config.var_cap);

    // (a) observation to x messages.
    sum_backward_messages(edges);
    let noise_var = 1.0 / beliefs.lambda;
    let mut pre_m = vec![Complex64::default(); d.l + 1];
    let mut pre_v = vec![0.0; d.l + 1];
    let mut suf_m = vec![Complex64::default(); d.l + 1];
    let mut suf_v = vec![0.0; d.l + 1];
    for n in 0..d.nodes() {
        let base = n * d.l;
        let xb = &edges.x_bwd[base..base + d.l];
        let vb = &edges.x_bwd_var[base..base + d.l];
        for l in 0..d.l {
            pre_m[l + 1] = pre_m[l] + xb[l];
            pre_v[l + 1] = pre_v[l] + vb[l];
            let r = d.l - 1 - l;
            suf_m[r] = suf_m[r + 1] + xb[r];
            suf_v[r] = suf_v[r + 1] + vb[r];
        }
        for l in 0..d.l {
            let others = pre_m[l] + suf_m[l + 1];
            let others_var = pre_v[l] + suf_v[l + 1];
            edges.x_fwd[base + l] = y[n] - others;
            edges.x_fwd_var[base + l] = clamp_var(noise_var + others_var, floor, cap);
        }
    }
    check_finite_c(&edges.x_fwd, iter, "observation-to-x means")?;
    check_finite(&edges.x_fwd_var, iter, "observation-to-x variances")?;

    // (b) x to source messages and their product, (c) source beliefs.
    for t in 0..d.t {
        for i in 0..d.m {
            let mut precision = 0.0;
            let mut weighted = Complex64::default();
            for l in 0..d.l {
                let e_row = d.edge(t, grid.row_of(i, l), l);
                let e = d.edge(t, i, l);
                let g = beliefs.g_hat[d.kernel(i, l)];
                let g2 = g.norm_sqr().max(KERNEL_POWER_FLOOR);
                let mean = edges.x_fwd[e_row] * g.conj() / g2;
                let var = clamp_var(edges.x_fwd_var[e_row] / g2, floor, cap);
                edges.s_fwd[e] = mean;
                edges.s_fwd_var[e] = var;
                precision += 1.0 / var;
                weighted += mean / var;
            }
            let n = d.node(t, i);
            let prod_var = clamp_var(1.0 / precision, floor, cap);
            let prod_mean = weighted * prod_var;
            edges.s_prod[n] = prod_mean;
            edges.s_prod_var[n] = prod_var;

            let gamma = beliefs.gamma[i];
            beliefs.s_hat[n] = prod_mean / (1.0 + prod_var * gamma);
            beliefs.s_var[n] = clamp_var(1.0 / (1.0 / prod_var + gamma), floor, cap);
        }
    }
    check_finite_c(&edges.s_fwd, iter, "x-to-source messages")?;
    check_finite_c(&beliefs.s_hat, iter, "source beliefs")?;
    check_finite(&beliefs.s_var, iter, "source beliefs")?;

    if !opts.learn_kernel {
        return Ok(());
    }

    // (d) x to kernel messages, combined over snapshots.
    let mut agg_prec = vec![0.0; d.kernels()];
    let mut agg_weighted = vec![Complex64::default(); d.kernels()];
    for t in 0..d.t {
        for i in 0..d.m {
            let n = d.node(t, i);
            let s = beliefs.s_hat[n];
            let second_moment = s.norm_sqr() + beliefs.s_var[n];
            for l in 0..d.l {
                let e_row = d.edge(t, grid.row_of(i, l), l);
                let e = d.edge(t, i, l);
                let k = d.kernel(i, l);
                let mean = edges.x_fwd[e_row] * s.conj() / second_moment;
                let var = clamp_var(edges.x_fwd_var[e_row] / second_moment, floor, cap);
                edges.g_fwd[e] = mean;
                edges.g_fwd_var[e] = var;
                agg_prec[k] += 1.0 / var;
                agg_weighted[k] += mean / var;
            }
        }
    }
    for k in 0..d.kernels() {
        let var = clamp_var(1.0 / agg_prec[k], floor, cap);
        edges.g_agg_var[k] = var;
        edges.g_agg[k] = agg_weighted[k] * var;
    }
    check_finite_c(&edges.g_agg, iter, "x-to-kernel messages")?;

    // (e) linearize the phase-centred kernel at the previous offset estimate.
    beliefs.alpha_prev.copy_from_slice(&beliefs.alpha);
    for i in 0..d.m {
        let a_ref = beliefs.alpha_prev[i];
        for (l, &delta) in grid.offsets().iter().enumerate() {
            let k = d.kernel(i, l);
            let (value, slope) = centred_kernel_with_derivative(delta, a_ref, d.m);
            edges.lin_value[k] = value;
            edges.lin_slope[k] = slope;
        }
    }

    // (f) kernel to α messages from the real and imaginary parts, α beliefs.
    // Kept in precision form: a slope with a vanishing real or imaginary part
    // simply contributes zero precision.
    for i in 0..d.m {
        let a_ref = beliefs.alpha_prev[i];
        let mut precision = 0.0;
        let mut weighted = 0.0;
        for l in 0..d.l {
            let k = d.kernel(i, l);
            let fg = edges.g_agg[k];
            let fv = edges.g_agg_var[k];
            let value = edges.lin_value[k];
            let slope = edges.lin_slope[k];
            let prec_re = 2.0 * slope.re * slope.re / fv;
            let prec_im = 2.0 * slope.im * slope.im / fv;
            let num_re = 2.0 * slope.re * (fg.re - value.re + slope.re * a_ref) / fv;
            let num_im = 2.0 * slope.im * (fg.im - value.im + slope.im * a_ref) / fv;
            let prec = prec_re + prec_im;
            let (mean, var) = if prec > 0.0 && prec.is_finite() {
                ((num_re + num_im) / prec, clamp_var(1.0 / prec, floor, cap))
            } else {
                (a_ref, cap)
            };
            edges.alpha_fwd[k] = mean;
            edges.alpha_fwd_var[k] = var;
            precision += 1.0 / var;
            weighted += mean / var;
        }
        let var = 1.0 / precision;
        beliefs.alpha_var[i] = clamp_var(var, floor, cap);
        beliefs.alpha[i] = (weighted * var).clamp(-0.5, 0.5);
    }
    check_finite(&edges.alpha_fwd, iter, "kernel-to-alpha messages")?;
    check_finite(&beliefs.alpha, iter, "alpha beliefs")?;
    Ok(())
}

/// `ε = ½ sqrt(log(mean γ) − mean(log γ))`, with the (Jensen-nonnegative)
/// argument clamped at zero against rounding.
pub fn retune_epsilon(gamma: &[f64]) -> f64 {
    // Scale-invariant, so work with ratios to one entry: equal precisions
    // then give exactly zero.
    let n = gamma.len() as f64;
    let reference = gamma[0];
    let mean = gamma.iter().map(|g| g / reference).sum::<f64>() / n;
    let mean_log = gamma.iter().map(|g| (g / reference).ln()).sum::<f64>() / n;
    0.5 * (mean.ln() - mean_log).max(0.0).sqrt()
}

/// `γ̂ = (ε + T) / (η + Σ_t m_t)` for one grid slot, given per-snapshot
/// source moments `m_t`.
///
/// The estimator passes `m_t = |ŝ_t|²`. Adding a posterior variance term
/// keeps empty slots at a prior variance comparable to the noise, which
/// then absorbs part of the residual and drags the noise precision upward.
pub fn update_gamma(epsilon: f64, eta: f64, second_moments: impl Iterator<Item = f64>) -> f64 {
    let mut t = 0usize;
    let mut sum = 0.0;
    for s in second_moments {
        sum += s;
        t += 1;
    }
    (epsilon + t as f64) / (eta + sum)
}

/// `λ̂ = MT / Σ (|y − ĥ|² + v_h)`.
pub fn update_lambda(y: &[Complex64], h_hat: &[Complex64], h_var: &[f64]) -> f64 {
    let resid: f64 = y
        .iter()
        .zip(h_hat)
        .zip(h_var)
        .map(|((y, h), v)| (y - h).norm_sqr() + v)
        .sum();
    y.len() as f64 / resid
}

pub fn backward_pass(
    y: &[Complex64],
    grid: &GridDecomposition,
    edges: &mut EdgeState,
    beliefs: &mut BeliefState,
    config: &AlgoConfig,
) -> Result<()> {
    backward_pass_with(y, grid, edges, beliefs, config, PassOptions::default())
}

pub fn backward_pass_with(
    y: &[Complex64],
    grid: &GridDecomposition,
    edges: &mut EdgeState,
    beliefs: &mut BeliefState,
    config: &AlgoConfig,
    opts: PassOptions,
) -> Result<()> {
    let d = edges.dims;
    check_dims(y, grid, d)?;
    let iter = beliefs.iteration + 1;
    let (floor, cap) = (config.var_floor, config.var_cap);

    // Source precisions and the shape retune.
    if opts.learn_gamma {
        for i in 0..d.m {
            let moments = (0..d.t).map(|t| {
                let n = d.node(t, i);
                beliefs.s_hat[n].norm_sqr()
            });
            beliefs.gamma[i] = update_gamma(beliefs.epsilon, config.eta, moments).clamp(1.0 / cap, 1.0 / floor);
        }
        check_finite(&beliefs.gamma, iter, "source precisions")?;
        beliefs.epsilon = retune_epsilon(&beliefs.gamma);
    }

    // Source to x-factor messages.
    for t in 0..d.t {
        for i in 0..d.m {
            let n = d.node(t, i);
            for l in 0..d.l {
                let e = d.edge(t, i, l);
                let (mean, var) = gaussian_extrinsic(
                    beliefs.s_hat[n],
                    beliefs.s_var[n],
                    edges.s_fwd[e],
                    edges.s_fwd_var[e],
                    floor,
                    cap,
                );
                edges.s_bwd[e] = mean;
                edges.s_bwd_var[e] = var;
            }
        }
    }
    check_finite_c(&edges.s_bwd, iter, "source-to-x messages")?;

    if opts.learn_kernel {
        for i in 0..d.m {
            let a_ref = beliefs.alpha_prev[i];
            for l in 0..d.l {
                let k = d.kernel(i, l);
                // α to kernel-factor messages.
                let (a_mean, a_var) = gaussian_extrinsic(
                    beliefs.alpha[i],
                    beliefs.alpha_var[i],
                    edges.alpha_fwd[k],
                    edges.alpha_fwd_var[k],
                    floor,
                    cap,
                );
                edges.alpha_bwd[k] = a_mean;
                edges.alpha_bwd_var[k] = a_var;

                // Linearized kernel factor to kernel message.
                let slope = edges.lin_slope[k];
                let gb = edges.lin_value[k] + slope * (a_mean - a_ref);
                let gb_var = clamp_var(a_var * slope.norm_sqr(), floor, cap);
                edges.g_bwd[k] = gb;
                edges.g_bwd_var[k] = gb_var;

                // Kernel belief.
                let fv = edges.g_agg_var[k];
                let var = clamp_var(1.0 / (1.0 / fv + 1.0 / gb_var), floor, cap);
                beliefs.g_var[k] = var;
                beliefs.g_hat[k] = (edges.g_agg[k] / fv + gb / gb_var) * var;
            }
        }
        check_finite_c(&beliefs.g_hat, iter, "kernel beliefs")?;

        // Kernel to x-factor messages, per snapshot.
        for t in 0..d.t {
            for i in 0..d.m {
                for l in 0..d.l {
                    let e = d.edge(t, i, l);
                    let k = d.kernel(i, l);
                    let (mean, var) = gaussian_extrinsic(
                        beliefs.g_hat[k],
                        beliefs.g_var[k],
                        edges.g_fwd[e],
                        edges.g_fwd_var[e],
                        floor,
                        cap,
                    );
                    edges.gx_bwd[e] = mean;
                    edges.gx_bwd_var[e] = var;
                }
            }
        }
    } else {
        for t in 0..d.t {
            for i in 0..d.m {
                for l in 0..d.l {
                    let e = d.edge(t, i, l);
                    edges.gx_bwd[e] = beliefs.g_hat[d.kernel(i, l)];
                    edges.gx_bwd_var[e] = 0.0;
                }
            }
        }
    }

    // x-factor to x messages: product of two independent Gaussians.
    let damping = config.damping;
    for t in 0..d.t {
        for i in 0..d.m {
            for l in 0..d.l {
                let e = d.edge(t, i, l);
                let (s, vs) = (edges.s_bwd[e], edges.s_bwd_var[e]);
                let (g, vg) = (edges.gx_bwd[e], edges.gx_bwd_var[e]);
                let mean = s * g;
                let var = clamp_var(s.norm_sqr() * vg + g.norm_sqr() * vs + vg * vs, floor, cap);
                let e_row = d.edge(t, grid.row_of(i, l), l);
                if damping < 1.0 {
                    edges.x_bwd[e_row] = mean * damping + edges.x_bwd[e_row] * (1.0 - damping);
                    edges.x_bwd_var[e_row] = var * damping + edges.x_bwd_var[e_row] * (1.0 - damping);
                } else {
                    edges.x_bwd[e_row] = mean;
                    edges.x_bwd_var[e_row] = var;
                }
            }
        }
    }
    check_finite_c(&edges.x_bwd, iter, "x-to-observation messages")?;
    check_finite(&edges.x_bwd_var, iter, "x-to-observation messages")?;

    // Noiseless-observation beliefs and the noise precision.
    sum_backward_messages(edges);
    let lambda = beliefs.lambda;
    for n in 0..d.nodes() {
        let vp = edges.p_var[n];
        let vh = 1.0 / (lambda + 1.0 / vp);
        beliefs.h_var[n] = vh;
        beliefs.h_hat[n] = (y[n] * lambda + edges.p_hat[n] / vp) * vh;
    }
    check_finite_c(&beliefs.h_hat, iter, "observation beliefs")?;
    if opts.learn_noise {
        beliefs.lambda = update_lambda(y, &beliefs.h_hat, &beliefs.h_var).clamp(1.0 / cap, 1.0 / floor);
        if !beliefs.lambda.is_finite() {
            return Err(DoaError::NonFinite { iteration: iter, stage: "noise precision" });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::build_grid;
    use crate::mp::initialize;

    #[test]
    fn gamma_hand_value() {
        let g = update_gamma(0.01, 1e-4, std::iter::once(1.0));
        assert!((g - 1.01 / 1.0001).abs() < 1e-15);
        assert!((g - 1.0098).abs() < 1e-4);
    }

    #[test]
    fn epsilon_of_equal_precisions_is_zero() {
        assert_eq!(retune_epsilon(&[3.7; 16]), 0.0);
        assert!(retune_epsilon(&[1.0, 100.0]) > 0.0);
    }

    #[test]
    fn lambda_unit_residuals() {
        let y = vec![Complex64::new(1.0, 0.0); 6];
        let h = vec![Complex64::new(1.0, 0.0); 6];
        assert_eq!(update_lambda(&y, &h, &[1.0; 6]), 1.0);
        let h0 = vec![Complex64::default(); 6];
        assert_eq!(update_lambda(&y, &h0, &[0.0; 6]), 1.0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = build_grid(16, 3).unwrap();
        let cfg = AlgoConfig::default();
        let (mut e, mut b) = initialize(&grid, 2, &cfg);
        let y = vec![Complex64::default(); 32];
        forward_pass(&y, &grid, &mut e, &mut b, &cfg).unwrap();
        assert!(e.x_fwd.iter().all(|z| z.norm() == 0.0));
        assert!(b.s_hat.iter().all(|z| z.norm() == 0.0));
        assert!(b.alpha.iter().all(|a| *a == 0.0));
        backward_pass(&y, &grid, &mut e, &mut b, &cfg).unwrap();
        assert!(b.lambda.is_finite() && b.lambda > 0.0);
    }

    #[test]
    fn row_sums_match_dense_v() {
        let grid = build_grid(8, 3).unwrap();
        let cfg = AlgoConfig::default();
        let (mut e, _) = initialize(&grid, 1, &cfg);
        for (i, x) in e.x_bwd.iter_mut().enumerate() {
            *x = Complex64::new(i as f64 * 0.25, 1.0 - i as f64 * 0.5);
        }
        for (i, v) in e.x_bwd_var.iter_mut().enumerate() {
            *v = 0.1 + i as f64;
        }
        sum_backward_messages(&mut e);
        // Stack row-edge messages in grid order and multiply by dense V.
        let v = grid.dense_matrix();
        let d = e.dims;
        for r in 0..8 {
            let mut p = Complex64::default();
            let mut pv = 0.0;
            for i in 0..8 {
                for l in 0..3 {
                    let coef = v[r][i * 3 + l];
                    let row = grid.row_of(i, l);
                    p += e.x_bwd[d.edge(0, row, l)] * coef;
                    pv += e.x_bwd_var[d.edge(0, row, l)] * coef;
                }
            }
            assert!((p - e.p_hat[r]).norm() < 1e-10);
            assert!((pv - e.p_var[r]).abs() < 1e-10);
        }
    }
}
