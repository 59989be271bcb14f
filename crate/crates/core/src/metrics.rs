//! Estimate-to-truth assignment, per-trial error records and their
//! aggregation over Monte-Carlo trials.
//!
//! Errors are in degrees². A trial's MSE averages the squared errors of its
//! matched sources; a cell's MSE averages the MSE of its successful trials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{DoaError, Result};

/// Largest source count for which the assignment is brute-forced.
pub const MAX_MATCH_SOURCES: usize = 5;

/// One trial of one method. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub mse_deg2: f64,
    pub rmse_deg: f64,
    pub success: bool,
    pub iterations: usize,
    pub runtime_ms: f64,
}

impl ExperimentRecord {
    pub const CSV_HEADER: &'static str =
        "method,M,L,K,T,snr_db,seed,mse_deg2,rmse_deg,success,iterations,runtime_ms";
}

/// Heap's algorithm, visiting every permutation of `0..n`.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Minimum-MSE bijection between estimates and truths (both in degrees).
///
/// Returns the MSE in degrees² and `assignment[i]`, the estimate matched to
/// truth `i`.
pub fn match_and_mse(estimates_deg: &[f64], truths_deg: &[f64]) -> Result<(f64, Vec<usize>)> {
    let k = truths_deg.len();
    if estimates_deg.len() != k {
        return Err(DoaError::LengthMismatch { expected: k, got: estimates_deg.len() });
    }
    if k == 0 {
        return Err(DoaError::Config("nothing to match".into()));
    }
    if k > MAX_MATCH_SOURCES {
        return Err(DoaError::Unsupported(format!(
            "assignment over {k} sources (at most {MAX_MATCH_SOURCES})"
        )));
    }
    let mut best = (f64::INFINITY, Vec::new());
    for_each_permutation(k, |perm| {
        let sse: f64 = perm
            .iter()
            .zip(truths_deg)
            .map(|(&e, t)| (estimates_deg[e] - t).powi(2))
            .sum();
        if sse < best.0 {
            best = (sse, perm.to_vec());
        }
    });
    Ok((best.0 / k as f64, best.1))
}

/// Summary of one (method, M, L, K, T, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub snr_db: f64,
    /// Mean over successful trials; NaN when none succeeded.
    pub mean_mse_deg2: f64,
    pub trials: usize,
    pub success_rate: f64,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    method: String,
    m: usize,
    l: usize,
    k: usize,
    t: usize,
    snr_bits: i64,
}

/// Total order on reals used for grouping; `-0.0` and `0.0` share a cell.
fn ordered_bits(x: f64) -> i64 {
    let x = if x == 0.0 { 0.0 } else { x };
    let bits = x.to_bits() as i64;
    bits ^ (((bits >> 63) as u64) >> 1) as i64
}

/// Groups records by cell, in method then size then SNR order.
pub fn aggregate(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<CellKey, (f64, usize, usize, f64)> = BTreeMap::new();
    for r in records {
        let key = CellKey {
            method: r.method.clone(),
            m: r.m,
            l: r.l,
            k: r.k,
            t: r.t,
            snr_bits: ordered_bits(r.snr_db),
        };
        let cell = cells.entry(key).or_insert((0.0, 0, 0, r.snr_db));
        cell.2 += 1;
        if r.success {
            cell.0 += r.mse_deg2;
            cell.1 += 1;
        }
    }
    cells
        .into_iter()
        .map(|(key, (sum, ok, n, snr_db))| CellSummary {
            method: key.method,
            m: key.m,
            l: key.l,
            k: key.k,
            t: key.t,
            snr_db,
            mean_mse_deg2: if ok > 0 { sum / ok as f64 } else { f64::NAN },
            trials: n,
            success_rate: ok as f64 / n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, snr: f64, mse: f64, success: bool) -> ExperimentRecord {
        ExperimentRecord {
            method: method.into(),
            m: 128,
            l: 7,
            k: 3,
            t: 10,
            snr_db: snr,
            seed: 1,
            mse_deg2: mse,
            rmse_deg: mse.sqrt(),
            success,
            iterations: 1,
            runtime_ms: 0.0,
        }
    }

    #[test]
    fn permutation_count() {
        let mut n = 0;
        for_each_permutation(4, |_| n += 1);
        assert_eq!(n, 24);
    }

    #[test]
    fn identity_and_swap() {
        assert_eq!(match_and_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap().0, 0.0);
        let (mse, assign) = match_and_mse(&[10.0, 0.0], &[0.0, 10.0]).unwrap();
        assert_eq!(mse, 0.0);
        assert_eq!(assign, vec![1, 0]);
    }

    #[test]
    fn half_degree_squared() {
        let (mse, _) = match_and_mse(&[1.0, 10.0], &[0.0, 10.0]).unwrap();
        assert!((mse - 0.5).abs() < 1e-15);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        assert!(match_and_mse(&[1.0], &[0.0, 10.0]).is_err());
        assert!(match_and_mse(&[0.0; 6], &[0.0; 6]).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[record("mp", 0.0, 2.5, true)]);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].mean_mse_deg2, 2.5);
        assert_eq!(one[0].trials, 1);

        let two = aggregate(&[record("mp", 0.0, 1.0, true), record("mp", 0.0, 3.0, true)]);
        assert_eq!(two[0].mean_mse_deg2, 2.0);

        let mixed = aggregate(&[
            record("mp", 0.0, 1.0, true),
            record("mp", 0.0, f64::NAN, false),
            record("mp", 0.0, 5.0, true),
            record("mp", 0.0, f64::NAN, false),
        ]);
        assert_eq!(mixed[0].mean_mse_deg2, 3.0);
        assert_eq!(mixed[0].success_rate, 0.5);
    }

    #[test]
    fn aggregate_orders_cells() {
        let rows = aggregate(&[
            record("mp", 10.0, 1.0, true),
            record("dft", 0.0, 1.0, true),
            record("mp", -5.0, 1.0, true),
            record("mp", 0.0, 1.0, true),
        ]);
        let keys: Vec<_> = rows.iter().map(|r| (r.method.as_str(), r.snr_db)).collect();
        assert_eq!(keys, vec![("dft", 0.0), ("mp", -5.0), ("mp", 0.0), ("mp", 10.0)]);
    }

    #[test]
    fn header_matches_serialization() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(record("mp", 0.0, 1.0, true)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), ExperimentRecord::CSV_HEADER);
    }
}
