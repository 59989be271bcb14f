//! Uniform linear array model in the inverse-DFT domain.
//!
//! A half-wavelength ULA with `M` elements has steering vector
//! `a(θ)_i = exp(-jπ i sin θ)`. Writing `M/2 · sin θ = w + α` with integer
//! `w` and `α ∈ [-0.5, 0.5)`, the unitary inverse DFT of `a(θ)` is a
//! Dirichlet kernel of fractional offset `α` circularly shifted to bin `w`.
//! Keeping the `L` largest kernel taps turns the array response into a
//! length-`L` block placed by a 0/1 matrix.

mod dft;
mod grid;
mod kernel;

pub use dft::{unitary_dft, unitary_idft, UnitaryDft};
pub use grid::{apply_sensing, build_grid, GridDecomposition};
pub(crate) use kernel::centred_kernel_with_derivative;
pub use kernel::{
    kernel_derivative, kernel_derivative_direct, kernel_value, kernel_value_direct,
    truncated_kernel, TruncatedKernel,
};

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Complex64, DoaError, Result};

const ANGLE_SLACK: f64 = 1e-12;

/// Half-wavelength uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UlaGeometry {
    element_count: usize,
}

impl UlaGeometry {
    pub fn new(element_count: usize) -> Result<Self> {
        if element_count < 2 || !element_count.is_multiple_of(2) {
            return Err(DoaError::Geometry(format!(
                "element count must be even and >= 2, got {element_count}"
            )));
        }
        Ok(Self { element_count })
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }
}

/// Integer bin `w` and fractional offset `alpha` with `w + alpha = M/2 · sin θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoaComponents {
    pub w: i64,
    pub alpha: f64,
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > FRAC_PI_2 + ANGLE_SLACK {
        return Err(DoaError::AngleOutOfRange(theta));
    }
    Ok(())
}

/// Steering vector `exp(-jπ i sin θ)`, `i = 0..M`.
pub fn steering_vector(theta: f64, m: usize) -> Result<Vec<Complex64>> {
    check_angle(theta)?;
    if m < 2 {
        return Err(DoaError::Geometry(format!("need at least 2 elements, got {m}")));
    }
    let phase = -PI * theta.sin();
    Ok((0..m).map(|i| Complex64::from_polar(1.0, phase * i as f64)).collect())
}

/// Splits `M/2 · sin θ` into `w` (folded into `{-M/2, …, M/2-1}`) and
/// `alpha ∈ [-0.5, 0.5)`.
pub fn decompose_doa(theta: f64, m: usize) -> Result<DoaComponents> {
    check_angle(theta)?;
    let half = (m / 2) as i64;
    let x = 0.5 * m as f64 * theta.clamp(-FRAC_PI_2, FRAC_PI_2).sin();
    // Round half up so that alpha never reaches +0.5.
    let mut w = (x + 0.5).floor() as i64;
    let alpha = x - w as f64;
    if w == half {
        w = -half;
    }
    Ok(DoaComponents { w, alpha })
}

/// `θ = arcsin(2(w + α)/M)`.
///
/// `w = -M/2` is the same bin as `+M/2`; when the former gives a sine below
/// -1 the latter representative is used.
pub fn compose_doa(c: DoaComponents, m: usize) -> Result<f64> {
    let half = (m / 2) as i64;
    let mut s = 2.0 * (c.w as f64 + c.alpha) / m as f64;
    if s < -1.0 && c.w == -half {
        s += 2.0;
    }
    if !s.is_finite() || s.abs() > 1.0 + 1e-12 {
        return Err(DoaError::NonPhysical(s));
    }
    Ok(s.clamp(-1.0, 1.0).asin())
}
