use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::Complex64;

/// Pair of unitary (`1/√M`-scaled) FFT plans of a fixed length.
///
/// The inverse transform is `y_k = M^{-1/2} Σ_m v_m exp(+j2πmk/M)`, which maps
/// a steering vector with `M/2 · sin θ = w` onto bin `w mod M`.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length must match plan length");
        self.inverse.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length must match plan length");
        self.forward.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }
}

/// Unitary inverse DFT of `v`.
pub fn unitary_idft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    UnitaryDft::new(v.len()).inverse_in_place(&mut out);
    out
}

/// Unitary forward DFT of `v`; inverse of [`unitary_idft`].
pub fn unitary_dft(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    UnitaryDft::new(v.len()).forward_in_place(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn constant_maps_to_impulse() {
        let v = vec![Complex64::new(1.0, 0.0); 128];
        let y = unitary_idft(&v);
        assert!((y[0].re - 128f64.sqrt()).abs() < 1e-12);
        assert!(y[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn broadside_steering_is_impulse() {
        let y = unitary_idft(&steering_vector(0.0, 64).unwrap());
        assert!((y[0] - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!(y[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn on_grid_steering_lands_on_bin_w() {
        // 64 sin 30° = 32
        let y = unitary_idft(&steering_vector(30f64.to_radians(), 128).unwrap());
        let peak = (0..128).max_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm())).unwrap();
        assert_eq!(peak, 32);
    }

    #[test]
    fn round_trip_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [8usize, 100, 128, 256] {
            let v: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let y = unitary_idft(&v);
            assert!((norm(&y) - norm(&v)).abs() <= 1e-12 * norm(&v));
            let back = unitary_dft(&y);
            let err: Vec<Complex64> = back.iter().zip(&v).map(|(a, b)| a - b).collect();
            assert!(norm(&err) <= 1e-10 * norm(&v));
        }
    }
}
