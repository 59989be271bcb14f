//! Reference estimators and the Cramér–Rao bound.
//!
//! All estimators here take array-domain snapshots `r(t)` (before the
//! inverse DFT), column-major `M × T`, and return the same [`DoaEstimate`]
//! shape as the message-passing estimator.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::array::{decompose_doa, UnitaryDft};
use crate::peaks::pick_peaks;
use crate::{Complex64, DoaError, DoaEstimate, Result, SourceEstimate};

/// Local refinement grid of the two-stage DFT method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Sub-grid points per coarse bin.
    pub points_per_bin: usize,
    /// Bins searched on each side of a coarse peak.
    pub half_width: usize,
    /// Non-maximum suppression radius in bins for the coarse peaks.
    pub guard_bins: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { points_per_bin: 100, half_width: 1, guard_bins: 3 }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_bin < 2 {
            return Err(DoaError::Config("points_per_bin must be at least 2".into()));
        }
        if self.half_width < 1 {
            return Err(DoaError::Config("half_width must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_raw(raw: &[Complex64], m: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(DoaError::Config("K must be at least 1".into()));
    }
    if m < 2 || !m.is_multiple_of(2) {
        return Err(DoaError::Geometry(format!("M must be even and >= 2, got {m}")));
    }
    if raw.is_empty() || !raw.len().is_multiple_of(m) {
        return Err(DoaError::LengthMismatch { expected: m, got: raw.len() });
    }
    Ok(raw.len() / m)
}

/// `(1/T) Σ_t |a(θ)ᴴ r(t)|²` with `sin θ = s`.
pub fn matched_filter_power(raw: &[Complex64], m: usize, s: f64) -> f64 {
    let step = Complex64::from_polar(1.0, PI * s);
    let cols = raw.len() / m;
    raw.chunks(m)
        .map(|col| {
            let mut phasor = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::default();
            for r in col {
                acc += phasor * r;
                phasor *= step;
            }
            acc.norm_sqr()
        })
        .sum::<f64>()
        / cols as f64
}

/// Snapshot-averaged power of the unitary inverse DFT of each column.
pub fn dft_spectrum(raw: &[Complex64], m: usize) -> Vec<f64> {
    let dft = UnitaryDft::new(m);
    let cols = raw.len() / m;
    let mut power = vec![0.0; m];
    let mut buf = vec![Complex64::default(); m];
    for col in raw.chunks(m) {
        buf.copy_from_slice(col);
        dft.inverse_in_place(&mut buf);
        power.iter_mut().zip(&buf).for_each(|(p, z)| *p += z.norm_sqr());
    }
    power.iter_mut().for_each(|p| *p /= cols as f64);
    power
}

fn source_from_sine(s: f64, m: usize, power: f64) -> Result<SourceEstimate> {
    let theta = s.clamp(-1.0, 1.0).asin();
    let c = decompose_doa(theta, m)?;
    let half = (m / 2) as i64;
    Ok(SourceEstimate {
        theta,
        grid_index: (c.w + half) as usize,
        w: c.w,
        alpha: c.alpha,
        power,
    })
}

/// Maps a fractional bin position to the sine in `[-1, 1)`.
fn sine_of_bin(u: f64, m: usize) -> f64 {
    let mf = m as f64;
    let wrapped = (u + mf / 2.0).rem_euclid(mf) - mf / 2.0;
    2.0 * wrapped / mf
}

/// Coarse DFT peaks followed by a matched-filter search on a sub-bin grid
/// around each peak.
pub fn dft_two_stage(raw: &[Complex64], m: usize, k: usize, refine: &RefineConfig) -> Result<DoaEstimate> {
    check_raw(raw, m, k)?;
    refine.validate()?;
    let spectrum = dft_spectrum(raw, m);
    let peaks = pick_peaks(&spectrum, &spectrum, k, refine.guard_bins);

    let p = refine.points_per_bin as i64;
    let span = refine.half_width as i64 * p;
    let sources = peaks
        .iter()
        .map(|&row| {
            let w = if row < m / 2 { row as f64 } else { row as f64 - m as f64 };
            let (mut best_s, mut best) = (sine_of_bin(w, m), f64::NEG_INFINITY);
            for j in -span..=span {
                let s = sine_of_bin(w + j as f64 / p as f64, m);
                let value = matched_filter_power(raw, m, s);
                if value > best {
                    best = value;
                    best_s = s;
                }
            }
            source_from_sine(best_s, m, spectrum[row])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DoaEstimate {
        shortfall: sources.len() < k,
        sources,
        iterations: 1,
        converged: true,
    })
}

/// `Σ_i exp(jπ i d)` in closed form.
fn steering_inner(d: f64, m: usize) -> Complex64 {
    let x = Complex64::from_polar(1.0, PI * d);
    let one = Complex64::new(1.0, 0.0);
    if (one - x).norm() < 1e-9 {
        return Complex64::new(m as f64, 0.0);
    }
    (one - x.powu(m as u32)) / (one - x)
}

/// Candidate angles and the correlations `a(θ_c)ᴴ r(t)`, row-major by candidate.
struct CandidateTable {
    sines: Vec<f64>,
    corr: Vec<Complex64>,
    t: usize,
}

impl CandidateTable {
    fn new(raw: &[Complex64], m: usize, t: usize, step_deg: f64) -> Self {
        let n = (180.0 / step_deg).floor() as usize + 1;
        let sines: Vec<f64> = (0..n).map(|c| (-90.0 + c as f64 * step_deg).to_radians().sin()).collect();
        let mut corr = vec![Complex64::default(); n * t];
        for (c, &s) in sines.iter().enumerate() {
            let step = Complex64::from_polar(1.0, PI * s);
            for (tt, col) in raw.chunks(m).enumerate() {
                let mut phasor = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::default();
                for r in col {
                    acc += phasor * r;
                    phasor *= step;
                }
                corr[c * t + tt] = acc;
            }
        }
        Self { sines, corr, t }
    }

    fn row(&self, c: usize) -> &[Complex64] {
        &self.corr[c * self.t..(c + 1) * self.t]
    }

    fn nearest(&self, s: f64) -> usize {
        (0..self.sines.len())
            .min_by(|&a, &b| (self.sines[a] - s).abs().total_cmp(&(self.sines[b] - s).abs()))
            .unwrap_or(0)
    }
}

/// Best candidate for one column of `A` with the other columns fixed.
///
/// With `A = [A_o, a]`, `tr(P_A R̂) = tr(P_o R̂) + Σ_t |aᴴr − uᴴA_oᴴr|² / (M − gᴴu)`
/// where `g = A_oᴴ a` and `u = (A_oᴴA_o)⁻¹ g`, so only the second term
/// depends on the candidate.
fn best_column(table: &CandidateTable, m: usize, others: &[usize]) -> Option<usize> {
    let ko = others.len();
    let gram = DMatrix::from_fn(ko, ko, |a, b| {
        steering_inner(table.sines[others[a]] - table.sines[others[b]], m)
    });
    let gram_inv = if ko > 0 { gram.try_inverse()? } else { gram };
    let t = table.t;
    let mut best = (None, f64::NEG_INFINITY);
    let mut g = vec![Complex64::default(); ko];
    let mut u = vec![Complex64::default(); ko];
    for c in 0..table.sines.len() {
        if others.iter().any(|&o| (table.sines[o] - table.sines[c]).abs() < 1e-9) {
            continue;
        }
        for (a, &o) in others.iter().enumerate() {
            g[a] = steering_inner(table.sines[o] - table.sines[c], m);
        }
        for a in 0..ko {
            u[a] = (0..ko).map(|b| gram_inv[(a, b)] * g[b]).sum();
        }
        let denom = m as f64 - g.iter().zip(&u).map(|(gi, ui)| gi.conj() * ui).sum::<Complex64>().re;
        if denom <= 1e-9 * m as f64 {
            continue;
        }
        let bc = table.row(c);
        let mut num = 0.0;
        for tt in 0..t {
            let mut proj = bc[tt];
            for (a, &o) in others.iter().enumerate() {
                proj -= u[a].conj() * table.corr[o * t + tt];
            }
            num += proj.norm_sqr();
        }
        let value = num / denom;
        if value > best.1 {
            best = (Some(c), value);
        }
    }
    best.0
}

/// Deterministic maximum likelihood on a uniform angle grid: maximizes
/// `tr(P_A R̂)`, exhaustively for one source and by alternating coordinate
/// maximization from the two-stage DFT estimate for two or three.
pub fn ml_grid(raw: &[Complex64], m: usize, k: usize, grid_step_deg: f64) -> Result<DoaEstimate> {
    let t = check_raw(raw, m, k)?;
    if k > 3 {
        return Err(DoaError::Unsupported(format!("grid ML supports at most 3 sources, got {k}")));
    }
    if !(grid_step_deg > 0.0) {
        return Err(DoaError::Config("grid_step_deg must be positive".into()));
    }
    let table = CandidateTable::new(raw, m, t, grid_step_deg);

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    if k > 1 {
        let init = dft_two_stage(raw, m, k, &RefineConfig::default())?;
        for s in &init.sources {
            let c = table.nearest(s.theta.sin());
            if !chosen.contains(&c) {
                chosen.push(c);
            }
        }
    }
    // Greedy completion when the initialization came up short (always for K = 1).
    while chosen.len() < k {
        match best_column(&table, m, &chosen) {
            Some(c) => chosen.push(c),
            None => break,
        }
    }

    let mut sweeps = 0;
    if chosen.len() > 1 {
        loop {
            sweeps += 1;
            let mut moved = false;
            for j in 0..chosen.len() {
                let others: Vec<usize> = chosen.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &c)| c).collect();
                if let Some(c) = best_column(&table, m, &others) {
                    if c != chosen[j] {
                        chosen[j] = c;
                        moved = true;
                    }
                }
            }
            if !moved || sweeps >= 50 {
                break;
            }
        }
    }

    let norm = (m * t) as f64;
    let mut sources = chosen
        .iter()
        .map(|&c| {
            let power = table.row(c).iter().map(|z| z.norm_sqr()).sum::<f64>() / norm;
            source_from_sine(table.sines[c], m, power)
        })
        .collect::<Result<Vec<_>>>()?;
    sources.sort_by(|a, b| b.power.total_cmp(&a.power));
    Ok(DoaEstimate {
        shortfall: sources.len() < k,
        sources,
        iterations: sweeps.max(1),
        converged: sweeps < 50,
    })
}

/// Deterministic Cramér–Rao bound for unit-power uncorrelated sources.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbBound {
    /// Per-source variance bound in radians², in input order.
    pub variances: Vec<f64>,
    /// Condition number of `AᴴA`.
    pub condition: f64,
    /// Set when the sources are too close for the bound to be reliable.
    pub ill_conditioned: bool,
}

const ILL_CONDITIONED: f64 = 1e8;

/// `(σ²/2T) {Re[(Dᴴ Π⊥_A D) ⊙ I]}⁻¹` with `σ² = 10^{-SNR/10}`.
pub fn crb(thetas: &[f64], m: usize, t: usize, snr_db: f64) -> Result<CrbBound> {
    if thetas.is_empty() {
        return Err(DoaError::Config("at least one angle is required".into()));
    }
    if t == 0 || m < 2 {
        return Err(DoaError::Config("M must be at least 2 and T at least 1".into()));
    }
    for (i, &a) in thetas.iter().enumerate() {
        if !a.is_finite() || a.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(DoaError::AngleOutOfRange(a));
        }
        if thetas[..i].contains(&a) {
            return Err(DoaError::Config(format!("angles must be distinct, {a} repeats")));
        }
    }
    let k = thetas.len();
    let a = DMatrix::from_fn(m, k, |i, j| Complex64::from_polar(1.0, -PI * i as f64 * thetas[j].sin()));
    let d = DMatrix::from_fn(m, k, |i, j| {
        Complex64::new(0.0, -PI * i as f64 * thetas[j].cos()) * a[(i, j)]
    });
    let gram = a.adjoint() * &a;
    let sv = gram.singular_values();
    let condition = sv.max() / sv.min();
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| DoaError::Config("steering vectors are linearly dependent".into()))?;
    // Dᴴ Π⊥ D = DᴴD − DᴴA (AᴴA)⁻¹ AᴴD
    let dha = d.adjoint() * &a;
    let fim = d.adjoint() * &d - &dha * gram_inv * dha.adjoint();
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    let variances = (0..k).map(|j| sigma2 / (2.0 * t as f64 * fim[(j, j)].re)).collect();
    Ok(CrbBound { variances, condition, ill_conditioned: condition > ILL_CONDITIONED })
}

/// Single-source closed form `6σ² / (T π² cos²θ M(M²−1))`.
pub fn crb_single_closed_form(theta: f64, m: usize, t: usize, snr_db: f64) -> f64 {
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    let mf = m as f64;
    6.0 * sigma2 / (t as f64 * PI * PI * theta.cos().powi(2) * mf * (mf * mf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_raw, Scenario};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn crb_matches_closed_form() {
        let b = crb(&[0.0], 128, 10, 0.0).unwrap();
        assert!(rel(b.variances[0], crb_single_closed_form(0.0, 128, 10, 0.0)) < 1e-8);
        let th = 0.4;
        let b = crb(&[th], 64, 3, 7.0).unwrap();
        assert!(rel(b.variances[0], crb_single_closed_form(th, 64, 3, 7.0)) < 1e-8);
    }

    #[test]
    fn crb_scaling() {
        let th = [-0.9, 0.1, 0.4];
        let b10 = crb(&th, 128, 10, 5.0).unwrap();
        let b20 = crb(&th, 128, 20, 5.0).unwrap();
        for (x, y) in b10.variances.iter().zip(&b20.variances) {
            assert!(rel(*y, x / 2.0) < 1e-12);
        }
        let s0 = crb(&[0.3], 128, 10, 0.0).unwrap().variances[0];
        let s3 = crb(&[0.3], 128, 10, 10.0 * 2f64.log10()).unwrap().variances[0];
        assert!(rel(s3, s0 / 2.0) < 1e-12);
    }

    #[test]
    fn crb_symmetric_in_angle() {
        let a = crb(&[-0.5, 0.2], 64, 5, 3.0).unwrap();
        let b = crb(&[0.5, -0.2], 64, 5, 3.0).unwrap();
        for (x, y) in a.variances.iter().zip(&b.variances) {
            assert!(rel(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn crb_flags_close_sources() {
        let b = crb(&[0.3, 0.3 + 1e-7], 32, 5, 10.0).unwrap();
        assert!(b.ill_conditioned);
        assert!(!crb(&[0.3, -0.3], 32, 5, 10.0).unwrap().ill_conditioned);
        assert!(crb(&[0.3, 0.3], 32, 5, 10.0).is_err());
    }

    #[test]
    fn dft_on_grid_noiseless() {
        let m = 64;
        let theta = (2.0 * 10.0 / m as f64).asin();
        let sc = Scenario::new(vec![theta], 3).unwrap();
        let raw = generate_raw(&sc, m, f64::INFINITY, 5).unwrap();
        let est = dft_two_stage(&raw, m, 1, &RefineConfig::default()).unwrap();
        let s = &est.sources[0];
        assert_eq!(s.w, 10);
        // Within one sub-grid step of the bin centre.
        assert!((s.theta.sin() * m as f64 / 2.0 - 10.0).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn ml_rejects_more_than_three_sources() {
        let raw = vec![Complex64::new(1.0, 0.0); 16];
        assert!(matches!(ml_grid(&raw, 8, 4, 0.1), Err(DoaError::Unsupported(_))));
        assert!(ml_grid(&raw, 8, 1, 0.0).is_err());
    }

    #[test]
    fn steering_inner_matches_sum() {
        for &d in &[0.0, 0.013, -0.7, 1.0, 1.999] {
            let direct: Complex64 = (0..16).map(|i| Complex64::from_polar(1.0, PI * i as f64 * d)).sum();
            assert!((steering_inner(d, 16) - direct).norm() < 1e-9);
        }
    }
}
