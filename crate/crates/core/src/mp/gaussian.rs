use std::ops::{Mul, Sub};

/// Leave-one-out Gaussian: divides message `(msg_mean, msg_var)` out of the
/// belief `(belief_mean, belief_var)`.
///
/// A division that yields a non-positive variance, or one above `var_cap`,
/// is replaced by the uninformative `(belief_mean, var_cap)`. Results below
/// `var_floor` are raised to it.
pub fn gaussian_extrinsic<T>(
    belief_mean: T,
    belief_var: f64,
    msg_mean: T,
    msg_var: f64,
    var_floor: f64,
    var_cap: f64,
) -> (T, f64)
where
    T: Copy + Mul<f64, Output = T> + Sub<Output = T>,
{
    let precision = 1.0 / belief_var - 1.0 / msg_var;
    let var = 1.0 / precision;
    if !(var > 0.0) || var > var_cap || !var.is_finite() {
        return (belief_mean, var_cap);
    }
    let mean = (belief_mean * (1.0 / belief_var) - msg_mean * (1.0 / msg_var)) * var;
    (mean, var.max(var_floor))
}

#[inline]
pub(crate) fn clamp_var(v: f64, floor: f64, cap: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(floor, cap)
    }
}
