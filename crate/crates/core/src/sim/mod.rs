//! Ground-truth scenarios and noisy multi-snapshot observations.
//!
//! Sources are unit-power circular complex Gaussian symbols, drawn afresh for
//! every snapshot. Noise is white circular complex Gaussian with per-element
//! variance `10^(-snr_db/10)`. Each column is mapped through the unitary
//! inverse DFT, which keeps the noise white with the same variance.

mod container;

pub use container::{read_snapshots, write_snapshots};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::{steering_vector, UnitaryDft};
use crate::{Complex64, DoaError, Result};

const SCENARIO_STREAM: u64 = 0;
const SYMBOL_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Per-purpose random stream derived from a trial seed.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-power circular complex Gaussian sample.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Angle interval in degrees, inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains_deg(&self, deg: f64) -> bool {
        deg >= self.lo && deg <= self.hi
    }
}

/// Intervals used for the three-source experiments.
pub fn default_intervals() -> Vec<Interval> {
    vec![
        Interval::new(-60.0, -50.0),
        Interval::new(-20.0, -10.0),
        Interval::new(20.0, 30.0),
    ]
}

pub fn validate_intervals(intervals: &[Interval]) -> Result<()> {
    if intervals.is_empty() {
        return Err(DoaError::Config("at least one angle interval is required".into()));
    }
    for iv in intervals {
        if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.lo > iv.hi {
            return Err(DoaError::Config(format!("malformed interval [{}, {}]", iv.lo, iv.hi)));
        }
        if iv.lo < -90.0 || iv.hi > 90.0 {
            return Err(DoaError::Config(format!(
                "interval [{}, {}] leaves [-90, 90] degrees",
                iv.lo, iv.hi
            )));
        }
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for pair in sorted.windows(2) {
        if pair[1].lo <= pair[0].hi {
            return Err(DoaError::Config(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
            )));
        }
    }
    Ok(())
}

/// Source directions and snapshot count of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Angles in radians, one per source.
    pub thetas: Vec<f64>,
    pub snapshots: usize,
}

impl Scenario {
    pub fn new(thetas: Vec<f64>, snapshots: usize) -> Result<Self> {
        if thetas.is_empty() || snapshots == 0 {
            return Err(DoaError::Config("scenario needs K >= 1 and T >= 1".into()));
        }
        for (i, a) in thetas.iter().enumerate() {
            if thetas[..i].contains(a) {
                return Err(DoaError::Config(format!("duplicate source angle {a}")));
            }
        }
        Ok(Self { thetas, snapshots })
    }

    pub fn source_count(&self) -> usize {
        self.thetas.len()
    }
}

/// One angle drawn uniformly from each interval.
pub fn draw_scenario(intervals: &[Interval], snapshots: usize, seed: u64) -> Result<Scenario> {
    validate_intervals(intervals)?;
    let mut rng = stream(seed, SCENARIO_STREAM);
    let thetas = intervals
        .iter()
        .map(|iv| {
            let u: f64 = rng.random();
            (iv.lo + (iv.hi - iv.lo) * u).to_radians()
        })
        .collect();
    Scenario::new(thetas, snapshots)
}

/// Observations after the unitary inverse DFT, plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub m: usize,
    pub t: usize,
    /// Column-major `M × T`: element `(r, t)` at `y[t * M + r]`.
    pub y: Vec<Complex64>,
    pub snr_db: f64,
    pub noise_precision_true: f64,
    pub seed: u64,
    /// True source angles in radians (empty when unknown).
    pub thetas: Vec<f64>,
}

impl SnapshotSet {
    pub fn column(&self, t: usize) -> &[Complex64] {
        &self.y[t * self.m..(t + 1) * self.m]
    }

    /// Array-domain snapshots `r(t)`, recovered with the forward unitary DFT.
    pub fn raw_snapshots(&self) -> Vec<Complex64> {
        let dft = UnitaryDft::new(self.m);
        let mut raw = self.y.clone();
        raw.chunks_mut(self.m).for_each(|c| dft.forward_in_place(c));
        raw
    }
}

/// Noisy array snapshots `r(t) = Σ_k a(θ_k) s_k(t) + w(t)` before the IDFT,
/// column-major. `snr_db = +inf` gives noiseless data.
pub fn generate_raw(scenario: &Scenario, m: usize, snr_db: f64, seed: u64) -> Result<Vec<Complex64>> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(DoaError::Geometry(format!("M must be even and >= 2, got {m}")));
    }
    let sigma = noise_std(snr_db);
    let steering = scenario
        .thetas
        .iter()
        .map(|&th| steering_vector(th, m))
        .collect::<Result<Vec<_>>>()?;
    let mut symbols = stream(seed, SYMBOL_STREAM);
    let mut noise = stream(seed, NOISE_STREAM);

    let mut raw = vec![Complex64::default(); m * scenario.snapshots];
    for col in raw.chunks_mut(m) {
        for a in &steering {
            let s = complex_normal(&mut symbols);
            col.iter_mut().zip(a).for_each(|(r, ai)| *r += ai * s);
        }
        // Unit-variance draws scaled afterwards so different SNRs share one
        // noise realization for a given seed.
        for r in col.iter_mut() {
            let n = complex_normal(&mut noise);
            if sigma > 0.0 {
                *r += n * sigma;
            }
        }
    }
    Ok(raw)
}

pub fn noise_std(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

pub fn generate_snapshots(scenario: &Scenario, m: usize, snr_db: f64, seed: u64) -> Result<SnapshotSet> {
    let mut y = generate_raw(scenario, m, snr_db, seed)?;
    let dft = UnitaryDft::new(m);
    y.chunks_mut(m).for_each(|c| dft.inverse_in_place(c));
    Ok(SnapshotSet {
        m,
        t: scenario.snapshots,
        y,
        snr_db,
        noise_precision_true: 10f64.powf(snr_db / 10.0),
        seed,
        thetas: scenario.thetas.clone(),
    })
}

/// Wraps externally supplied post-IDFT observations.
pub fn snapshot_set_from_y(m: usize, t: usize, y: Vec<Complex64>) -> Result<SnapshotSet> {
    if y.len() != m * t {
        return Err(DoaError::LengthMismatch { expected: m * t, got: y.len() });
    }
    Ok(SnapshotSet {
        m,
        t,
        y,
        snr_db: f64::NAN,
        noise_precision_true: f64::NAN,
        seed: 0,
        thetas: Vec::new(),
    })
}
