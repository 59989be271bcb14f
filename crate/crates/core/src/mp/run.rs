use std::io::Write;

use super::passes::{backward_pass, forward_pass};
use super::state::{initialize, BeliefState};
use super::AlgoConfig;
use crate::array::{compose_doa, decompose_doa, DoaComponents, GridDecomposition};
use crate::peaks::pick_peaks;
use crate::{Complex64, DoaError, DoaEstimate, Result, SourceEstimate};

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub relative_change: f64,
    pub lambda_hat: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub beliefs: BeliefState,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
}

impl RunResult {
    pub fn doas(&self, k: usize, grid: &GridDecomposition) -> Result<DoaEstimate> {
        let mut est = extract_doas(&self.beliefs, k, grid)?;
        est.converged = self.converged;
        Ok(est)
    }
}

fn relative_change(new: &[Complex64], old: &[Complex64]) -> f64 {
    let num: f64 = new.iter().zip(old).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = old.iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Alternates forward and backward passes until the relative change of the
/// source estimates drops to `sigma_s` or `max_iter` passes have run.
///
/// The first iteration is compared against the all-zero initialization and
/// is never taken as converged. `y` is column-major `M × T`.
pub fn run(y: &[Complex64], grid: &GridDecomposition, config: &AlgoConfig) -> Result<RunResult> {
    config.validate()?;
    let m = grid.m();
    if y.is_empty() || !y.len().is_multiple_of(m) {
        return Err(DoaError::LengthMismatch { expected: m, got: y.len() });
    }
    let t = y.len() / m;
    let (mut edges, mut beliefs) = initialize(grid, t, config);
    let mut trace = Vec::new();
    let mut previous = beliefs.s_hat.clone();
    let mut converged = false;

    for iteration in 1..=config.max_iter {
        forward_pass(y, grid, &mut edges, &mut beliefs, config)?;
        backward_pass(y, grid, &mut edges, &mut beliefs, config)?;
        beliefs.iteration = iteration;

        let change = relative_change(&beliefs.s_hat, &previous);
        trace.push(TraceRow {
            iteration,
            relative_change: change,
            lambda_hat: beliefs.lambda,
            epsilon: beliefs.epsilon,
        });
        if iteration > 1 && change <= config.sigma_s {
            converged = true;
            break;
        }
        previous.copy_from_slice(&beliefs.s_hat);
    }
    let iterations = beliefs.iteration;
    Ok(RunResult { beliefs, trace, iterations, converged })
}

/// Picks the `k` strongest grid slots by mean posterior power, suppressing
/// slots within `⌊L/2⌋` bins of a chosen one, and maps each to an angle.
///
/// A source close to a bin boundary (`|α| ≈ 0.5`) is usually shared by the
/// two slots on either side of it, each with an offset pulled toward its own
/// bin. The position of a picked slot is therefore the power-weighted mean of
/// `w + α̂` over the slot and those immediate neighbours whose own position
/// lies within one bin of it. Far from a boundary the neighbours carry only
/// noise-level power and the weighted mean stays at the slot's own estimate.
pub fn extract_doas(beliefs: &BeliefState, k: usize, grid: &GridDecomposition) -> Result<DoaEstimate> {
    if k == 0 {
        return Err(DoaError::Config("K must be at least 1".into()));
    }
    let m = grid.m();
    let power = beliefs.mean_power();
    let signal = beliefs.signal_power();
    let picked = pick_peaks(&power, &signal, k, grid.l() / 2);
    let sources = picked
        .iter()
        .map(|&i| {
            // The merged position can cross the ±M/2 seam; wrap it back.
            let half = (m / 2) as f64;
            let u = (merged_position(beliefs, &signal, grid, i) + half).rem_euclid(m as f64) - half;
            let theta = compose_doa(DoaComponents { w: 0, alpha: u }, m)?;
            let c = decompose_doa(theta, m)?;
            Ok(SourceEstimate { theta, grid_index: i, w: c.w, alpha: c.alpha, power: power[i] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DoaEstimate {
        shortfall: sources.len() < k,
        sources,
        iterations: beliefs.iteration,
        converged: false,
    })
}

/// Power-weighted `w + α̂` around grid slot `i`, unwrapped relative to it.
fn merged_position(beliefs: &BeliefState, signal: &[f64], grid: &GridDecomposition, i: usize) -> f64 {
    let m = grid.m();
    let own = grid.w_of(i) as f64 + beliefs.alpha[i];
    let (mut weight, mut sum) = (signal[i], signal[i] * own);
    for j in [(i + m - 1) % m, (i + 1) % m] {
        let mut u = grid.w_of(j) as f64 + beliefs.alpha[j];
        // Neighbours across the w = ±M/2 seam.
        u += m as f64 * ((own - u) / m as f64).round();
        if (u - own).abs() <= 1.0 {
            weight += signal[j];
            sum += signal[j] * u;
        }
    }
    sum / weight
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(serde::Serialize)]
struct BeliefRow {
    grid_index: usize,
    w: i64,
    gamma_hat: f64,
    alpha_hat: f64,
    mean_power: f64,
}

pub fn write_beliefs_csv<W: Write>(beliefs: &BeliefState, grid: &GridDecomposition, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, mean_power) in beliefs.mean_power().into_iter().enumerate() {
        w.serialize(BeliefRow {
            grid_index: i,
            w: grid.w_of(i),
            gamma_hat: beliefs.gamma[i],
            alpha_hat: beliefs.alpha[i],
            mean_power,
        })?;
    }
    w.flush()?;
    Ok(())
}
