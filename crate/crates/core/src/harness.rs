//! Monte-Carlo sweeps over SNR and snapshot count.
//!
//! A sweep visits every `(T, SNR)` cell. Trial `i` of every cell and method
//! uses seed `base_seed + i` for both the scenario and the snapshot noise,
//! so methods within a cell see identical data and neighbouring cells share
//! their source angles and noise shapes. Each cell's trials run on a worker
//! pool and are written in a fixed order once the cell completes, which
//! keeps the output independent of the pool size.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{crb, dft_two_stage, ml_grid, RefineConfig};
use crate::metrics::{aggregate, match_and_mse, CellSummary, ExperimentRecord};
use crate::mp::{estimate, AlgoConfig};
use crate::sim::{default_intervals, draw_scenario, generate_snapshots, validate_intervals, Interval, SnapshotSet};
use crate::{DoaError, DoaEstimate, Result};

/// Comment line stamped into every CSV written by the harness.
pub const UNITS_COMMENT: &str = "# units: snr_db per-source power over per-element noise variance (dB); \
mse_deg2 degrees^2; rmse_deg degrees; runtime_ms milliseconds; \
crb rows: deterministic CRB, unit-power sources, mean over sources and trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mp,
    Dft,
    Ml,
    Crb,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mp => "mp",
            Method::Dft => "dft",
            Method::Ml => "ml",
            Method::Crb => "crb",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mp" => Ok(Method::Mp),
            "dft" => Ok(Method::Dft),
            "ml" => Ok(Method::Ml),
            "crb" => Ok(Method::Crb),
            other => Err(DoaError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Settings shared by every estimator call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSettings {
    #[serde(rename = "L")]
    pub l: usize,
    pub algo: AlgoConfig,
    pub refine: RefineConfig,
    pub ml_step_deg: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { l: 7, algo: AlgoConfig::default(), refine: RefineConfig::default(), ml_step_deg: 0.01 }
    }
}

/// Runs one estimator on a snapshot set.
pub fn run_method(method: Method, set: &SnapshotSet, k: usize, settings: &EstimatorSettings) -> Result<DoaEstimate> {
    match method {
        Method::Mp => estimate(set, k, settings.l, &settings.algo).map(|(est, _)| est),
        Method::Dft => dft_two_stage(&set.raw_snapshots(), set.m, k, &settings.refine),
        Method::Ml => ml_grid(&set.raw_snapshots(), set.m, k, settings.ml_step_deg),
        Method::Crb => Err(DoaError::Unsupported("the CRB as an estimator".into())),
    }
}

/// Declarative description of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub snr_list_db: Vec<f64>,
    pub t_list: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    /// Source count; must equal the number of intervals.
    #[serde(rename = "K")]
    pub k: usize,
    pub intervals: Vec<Interval>,
    #[serde(flatten)]
    pub settings: EstimatorSettings,
}

impl SweepSpec {
    /// SNR sweep from −10 to 20 dB at T ∈ {3, 10, 20}.
    pub fn snr_sweep() -> Self {
        Self {
            methods: vec![Method::Mp, Method::Dft, Method::Crb],
            snr_list_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            t_list: vec![3, 10, 20],
            trials: 100,
            base_seed: 0,
            m: 128,
            k: 3,
            intervals: default_intervals(),
            settings: EstimatorSettings::default(),
        }
    }

    /// Snapshot sweep at 0 dB.
    pub fn snapshot_sweep() -> Self {
        Self { snr_list_db: vec![0.0], t_list: vec![1, 2, 5, 10, 20, 50], ..Self::snr_sweep() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DoaError::Config(msg));
        if self.methods.is_empty() {
            return bad("sweep needs at least one method".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_list_db.is_empty() || self.t_list.is_empty() {
            return bad("snr_list_db and t_list must be non-empty".into());
        }
        if self.t_list.contains(&0) {
            return bad("snapshot counts must be positive".into());
        }
        if self.k != self.intervals.len() {
            return bad(format!("K = {} but {} intervals given", self.k, self.intervals.len()));
        }
        validate_intervals(&self.intervals)?;
        self.settings.algo.validate()?;
        self.settings.refine.validate()?;
        Ok(())
    }

    /// `(T, SNR)` cells in output order.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.t_list
            .iter()
            .flat_map(|&t| self.snr_list_db.iter().map(move |&snr| (t, snr)))
            .collect()
    }

    /// Rows a complete sweep writes.
    pub fn expected_rows(&self) -> usize {
        let cells = self.cells().len();
        let estimators = self.methods.iter().filter(|&&m| m != Method::Crb).count();
        estimators * cells * self.trials + if self.methods.contains(&Method::Crb) { cells } else { 0 }
    }
}

fn record(spec: &SweepSpec, method: &str, t: usize, snr_db: f64, seed: u64) -> ExperimentRecord {
    ExperimentRecord {
        method: method.to_string(),
        m: spec.m,
        l: spec.settings.l,
        k: spec.k,
        t,
        snr_db,
        seed,
        mse_deg2: f64::NAN,
        rmse_deg: f64::NAN,
        success: false,
        iterations: 0,
        runtime_ms: 0.0,
    }
}

/// One trial of one estimator. Errors, including divergence, become failed
/// records with NaN errors.
fn run_trial(spec: &SweepSpec, method: Method, t: usize, snr_db: f64, trial: usize) -> ExperimentRecord {
    let seed = spec.base_seed + trial as u64;
    let mut rec = record(spec, method.name(), t, snr_db, seed);
    let data = draw_scenario(&spec.intervals, t, seed).and_then(|sc| generate_snapshots(&sc, spec.m, snr_db, seed));
    let set = match data {
        Ok(set) => set,
        Err(_) => return rec,
    };
    let start = Instant::now();
    let outcome = run_method(method, &set, spec.k, &spec.settings);
    rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Ok(est) = outcome {
        rec.iterations = est.iterations;
        if !est.shortfall {
            let est_deg: Vec<f64> = est.thetas().iter().map(|x| x.to_degrees()).collect();
            let truth_deg: Vec<f64> = set.thetas.iter().map(|x| x.to_degrees()).collect();
            if let Ok((mse, _)) = match_and_mse(&est_deg, &truth_deg) {
                rec.mse_deg2 = mse;
                rec.rmse_deg = mse.sqrt();
                rec.success = true;
            }
        }
    }
    rec
}

/// Bound row for a cell: the per-source CRB in degrees² averaged over the
/// sources and over the cell's scenarios.
fn crb_row(spec: &SweepSpec, t: usize, snr_db: f64) -> ExperimentRecord {
    let mut rec = record(spec, Method::Crb.name(), t, snr_db, spec.base_seed);
    let start = Instant::now();
    let mut sum = 0.0;
    let mut ok = true;
    for trial in 0..spec.trials {
        let seed = spec.base_seed + trial as u64;
        match draw_scenario(&spec.intervals, t, seed).and_then(|sc| crb(&sc.thetas, spec.m, t, snr_db)) {
            Ok(bound) => {
                ok &= !bound.ill_conditioned;
                let deg2 = bound.variances.iter().map(|v| v.to_degrees().to_degrees()).sum::<f64>();
                sum += deg2 / bound.variances.len() as f64;
            }
            Err(_) => ok = false,
        }
    }
    rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    if ok {
        rec.mse_deg2 = sum / spec.trials as f64;
        rec.rmse_deg = rec.mse_deg2.sqrt();
        rec.success = true;
    }
    rec
}

fn write_preamble<W: Write>(out: &mut W, spec: &SweepSpec) -> Result<()> {
    writeln!(out, "# config: {}", serde_json::to_string(spec)?)?;
    writeln!(out, "{UNITS_COMMENT}")?;
    Ok(())
}

/// Runs the sweep on `jobs` worker threads, streaming records to `out` one
/// cell at a time. Returns every record in output order.
pub fn run_sweep<W: Write>(spec: &SweepSpec, jobs: usize, mut out: W) -> Result<Vec<ExperimentRecord>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| DoaError::Config(format!("worker pool: {e}")))?;

    write_preamble(&mut out, spec)?;
    let mut writer = csv::Writer::from_writer(out);
    let estimators: Vec<Method> = spec.methods.iter().copied().filter(|&m| m != Method::Crb).collect();
    let mut all = Vec::with_capacity(spec.expected_rows());
    for (t, snr_db) in spec.cells() {
        let jobs: Vec<(Method, usize)> = estimators
            .iter()
            .flat_map(|&m| (0..spec.trials).map(move |i| (m, i)))
            .collect();
        let mut rows: Vec<ExperimentRecord> =
            pool.install(|| jobs.par_iter().map(|&(m, i)| run_trial(spec, m, t, snr_db, i)).collect());
        if spec.methods.contains(&Method::Crb) {
            rows.push(crb_row(spec, t, snr_db));
        }
        for row in &rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        all.extend(rows);
    }
    Ok(all)
}

pub fn write_summary<W: Write>(spec: &SweepSpec, summary: &[CellSummary], mut out: W) -> Result<()> {
    write_preamble(&mut out, spec)?;
    let mut writer = csv::Writer::from_writer(out);
    for row in summary {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Paths of the files written by [`run_sweep_to_dir`].
#[derive(Debug, Clone)]
pub struct SweepFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
}

/// Writes `records.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn run_sweep_to_dir(spec: &SweepSpec, jobs: usize, dir: &Path) -> Result<(SweepFiles, Vec<CellSummary>)> {
    std::fs::create_dir_all(dir)?;
    let files = SweepFiles { records: dir.join("records.csv"), summary: dir.join("summary.csv") };
    let records = run_sweep(spec, jobs, BufWriter::new(File::create(&files.records)?))?;
    let summary = aggregate(&records);
    write_summary(spec, &summary, BufWriter::new(File::create(&files.summary)?))?;
    Ok((files, summary))
}
