//! Dirichlet kernel of a fractional DFT offset and its α-derivative.
//!
//! `k(δ, α) = M^{-1/2} Σ_{m=0}^{M-1} exp(j2πm(δ-α)/M)`.
//!
//! The estimator evaluates `k` and `∂k/∂α` for every (grid point, slot) pair on
//! every iteration, so the O(1) closed form
//! `M^{-1/2} exp(jπu(M-1)/M) · sin(πu)/sin(πu/M)`, `u = δ - α`, is used
//! there. Within `NEAR_ZERO` of a multiple of `M` the closed-form derivative
//! cancels catastrophically and the M-term sum is used instead.

use std::f64::consts::PI;

use super::GridDecomposition;
use crate::Complex64;

const NEAR_ZERO: f64 = 1e-3;

/// The `L` retained kernel taps for one fractional offset.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedKernel {
    pub values: Vec<Complex64>,
    pub alpha: f64,
}

impl TruncatedKernel {
    /// `Σ_l |g_l|² / M`: share of the full kernel energy that was kept.
    pub fn energy_fraction(&self, m: usize) -> f64 {
        self.values.iter().map(|g| g.norm_sqr()).sum::<f64>() / m as f64
    }
}

/// Reduces `u` to `[-M/2, M/2]` using the M-periodicity of the kernel.
fn reduce(u: f64, m: f64) -> f64 {
    u - m * (u / m).round()
}

pub fn kernel_value_direct(delta: i64, alpha: f64, m: usize) -> Complex64 {
    let step = 2.0 * PI * (delta as f64 - alpha) / m as f64;
    let sum: Complex64 = (0..m).map(|i| Complex64::from_polar(1.0, step * i as f64)).sum();
    sum / (m as f64).sqrt()
}

pub fn kernel_derivative_direct(delta: i64, alpha: f64, m: usize) -> Complex64 {
    let mf = m as f64;
    let step = 2.0 * PI * (delta as f64 - alpha) / mf;
    let sum: Complex64 = (0..m)
        .map(|i| {
            let i = i as f64;
            Complex64::new(0.0, -2.0 * PI * i / mf) * Complex64::from_polar(1.0, step * i)
        })
        .sum();
    sum / mf.sqrt()
}

/// Kernel value and α-derivative at `(delta, alpha)`.
pub(crate) fn kernel_with_derivative(delta: i64, alpha: f64, m: usize) -> (Complex64, Complex64) {
    let mf = m as f64;
    let u = reduce(delta as f64 - alpha, mf);
    if u.abs() < NEAR_ZERO {
        return (
            kernel_value_direct(delta, alpha, m),
            kernel_derivative_direct(delta, alpha, m),
        );
    }
    let (sin_u, cos_u) = (PI * u).sin_cos();
    let (sin_um, cos_um) = (PI * u / mf).sin_cos();
    let ratio = sin_u / sin_um;
    let ratio_du = PI * (cos_u * sin_um - sin_u * cos_um / mf) / (sin_um * sin_um);
    let rot = Complex64::from_polar(1.0 / mf.sqrt(), PI * u * (mf - 1.0) / mf);
    let value = rot * ratio;
    // d/dα = -d/du
    let d_du = rot * Complex64::new(ratio_du, PI * (mf - 1.0) / mf * ratio);
    (value, -d_du)
}

/// `k(δ, α)·exp(jπα(M-1)/M)` and its α-derivative.
///
/// The factor is a phase common to all taps of a slot, so it can be absorbed
/// into the circularly symmetric source amplitude without changing the
/// model. What it removes is the α-dependence of that common phase: the
/// centred taps are `exp(jπδ(M-1)/M)` times a real function of `α`, and a
/// linearization in `α` no longer spends most of its slope on a direction
/// the source phase can explain equally well.
pub(crate) fn centred_kernel_with_derivative(
    delta: i64,
    alpha: f64,
    m: usize,
) -> (Complex64, Complex64) {
    let (value, slope) = kernel_with_derivative(delta, alpha, m);
    let phi = PI * (m as f64 - 1.0) / m as f64;
    let rot = Complex64::from_polar(1.0, phi * alpha);
    (value * rot, (slope + Complex64::new(0.0, phi) * value) * rot)
}

/// Kernel value `k(δ, α)`.
pub fn kernel_value(delta: i64, alpha: f64, m: usize) -> Complex64 {
    kernel_with_derivative(delta, alpha, m).0
}

/// `∂k(δ, α)/∂α`, the slope used to linearize the kernel around a reference α.
pub fn kernel_derivative(delta: i64, alpha_ref: f64, m: usize) -> Complex64 {
    kernel_with_derivative(delta, alpha_ref, m).1
}

/// Kernel taps at the grid's symmetric offsets.
pub fn truncated_kernel(alpha: f64, grid: &GridDecomposition) -> TruncatedKernel {
    TruncatedKernel {
        values: grid
            .offsets()
            .iter()
            .map(|&d| kernel_value(d, alpha, grid.m()))
            .collect(),
        alpha,
    }
}
