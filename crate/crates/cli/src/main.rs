use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mpdoa::baselines::crb;
use mpdoa::harness::{run_method, run_sweep_to_dir, EstimatorSettings, Method, SweepSpec};
use mpdoa::sim::{draw_scenario, generate_snapshots, read_snapshots, write_snapshots, Interval, Scenario, SnapshotSet};
use mpdoa::{DoaError, DoaEstimate};

const OUT_DIR_ENV: &str = "MPDOA_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "mpdoa-out";

/// Exit status for a run that found fewer sources than requested.
const EXIT_SHORTFALL: u8 = 2;
/// Exit status for a diverged (non-finite) estimator run.
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "mpdoa", version, about = "Off-grid DOA estimation for large uniform linear arrays")]
struct Cli {
    /// Default directory for generated files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a snapshot file.
    Simulate {
        #[command(flatten)]
        scene: SceneArgs,
        /// Output file (default: <out-dir>/snapshots_<seed>.txt).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate source directions from a snapshot file or generated data.
    Estimate {
        #[arg(long, default_value = "mp")]
        method: Method,
        /// Snapshot file to read.
        #[arg(long = "in", conflicts_with = "generate")]
        input: Option<PathBuf>,
        /// Generate the snapshots from the scene options instead.
        #[arg(long)]
        generate: bool,
        #[command(flatten)]
        scene: SceneArgs,
        /// Number of sources (default: the number of known true angles).
        #[arg(long = "K")]
        k: Option<usize>,
        /// Kernel taps per grid point (overrides the config file).
        #[arg(long = "L")]
        l: Option<usize>,
        /// JSON estimator settings: `L`, `algo`, `refine`, `ml_step_deg`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the estimates as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep from a JSON spec.
    Sweep {
        /// Sweep spec; omitted means the built-in preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Built-in spec used without --spec: `snr` or `snapshots`.
        #[arg(long, default_value = "snr")]
        preset: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: <out-dir>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved spec as JSON and exit.
        #[arg(long)]
        print_spec: bool,
    },
    /// Cramér–Rao bound for given source angles.
    Crb {
        /// Source angles in degrees, comma separated.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        thetas: Vec<f64>,
        #[arg(long = "M", default_value_t = 128)]
        m: usize,
        #[arg(long = "T", default_value_t = 10)]
        t: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr: f64,
    },
}

#[derive(Args)]
struct SceneArgs {
    /// Angle intervals in degrees, `lo:hi` comma separated; one source each.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', value_parser = parse_interval)]
    intervals: Vec<Interval>,
    /// Fixed source angles in degrees, comma separated.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', conflicts_with = "intervals")]
    thetas: Vec<f64>,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long = "T", default_value_t = 10)]
    t: usize,
    #[arg(long = "M", default_value_t = 128)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("`{s}` is not of the form lo:hi"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok(Interval::new(num(lo)?, num(hi)?))
}

impl SceneArgs {
    fn generate(&self) -> mpdoa::Result<SnapshotSet> {
        let scenario = if !self.thetas.is_empty() {
            Scenario::new(self.thetas.iter().map(|d| d.to_radians()).collect(), self.t)?
        } else if !self.intervals.is_empty() {
            draw_scenario(&self.intervals, self.t, self.seed)?
        } else {
            return Err(DoaError::Config("give --thetas or --intervals".into()));
        };
        generate_snapshots(&scenario, self.m, self.snr, self.seed)
    }
}

fn load_settings(path: Option<&Path>) -> mpdoa::Result<EstimatorSettings> {
    match path {
        Some(p) => Ok(serde_json::from_reader(BufReader::new(File::open(p)?))?),
        None => Ok(EstimatorSettings::default()),
    }
}

fn print_estimate(method: Method, set: &SnapshotSet, est: &DoaEstimate) {
    println!("method {}", method.name());
    println!("M {} T {} K {}", set.m, set.t, est.sources.len());
    if !set.thetas.is_empty() {
        let truth: Vec<String> = set.thetas.iter().map(|t| format!("{:.6}", t.to_degrees())).collect();
        println!("true_deg {}", truth.join(" "));
    }
    println!("iterations {} converged {}", est.iterations, est.converged);
    println!("theta_deg,w,alpha,power");
    for s in &est.sources {
        println!("{:.6},{},{:.6},{:.6e}", s.theta.to_degrees(), s.w, s.alpha, s.power);
    }
    if est.shortfall {
        println!("shortfall");
    }
}

fn write_estimate_csv(path: &Path, est: &DoaEstimate) -> mpdoa::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta_deg", "w", "alpha", "power"])?;
    for s in &est.sources {
        w.write_record([
            s.theta.to_degrees().to_string(),
            s.w.to_string(),
            s.alpha.to_string(),
            s.power.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(scene: &SceneArgs, out: Option<PathBuf>, out_dir: &Path) -> mpdoa::Result<ExitCode> {
    let set = scene.generate()?;
    let path = match out {
        Some(p) => p,
        None => {
            std::fs::create_dir_all(out_dir)?;
            out_dir.join(format!("snapshots_{}.txt", scene.seed))
        }
    };
    let mut w = BufWriter::new(File::create(&path)?);
    write_snapshots(&set, &mut w)?;
    w.flush()?;
    let truth: Vec<String> = set.thetas.iter().map(|t| format!("{:.6}", t.to_degrees())).collect();
    println!("wrote {} (M {} T {} true_deg {})", path.display(), set.m, set.t, truth.join(" "));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_estimate(
    method: Method,
    input: Option<PathBuf>,
    generate: bool,
    scene: &SceneArgs,
    k: Option<usize>,
    l: Option<usize>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> mpdoa::Result<ExitCode> {
    if method == Method::Crb {
        return Err(DoaError::Config("use the `crb` subcommand for the bound".into()));
    }
    let set = match (input, generate) {
        (Some(path), _) => read_snapshots(BufReader::new(File::open(path)?))?,
        (None, true) => scene.generate()?,
        (None, false) => return Err(DoaError::Config("give --in FILE or --generate".into())),
    };
    let k = match k.or((!set.thetas.is_empty()).then_some(set.thetas.len())) {
        Some(k) => k,
        None => return Err(DoaError::Config("--K is required when the true angles are unknown".into())),
    };
    let mut settings = load_settings(config.as_deref())?;
    if let Some(l) = l {
        settings.l = l;
    }

    let start = Instant::now();
    let result = run_method(method, &set, k, &settings);
    eprintln!("runtime_ms {:.3}", start.elapsed().as_secs_f64() * 1e3);
    let est = match result {
        Ok(est) => est,
        Err(e @ DoaError::NonFinite { .. }) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_DIVERGED));
        }
        Err(e) => return Err(e),
    };
    print_estimate(method, &set, &est);
    if let Some(path) = out {
        write_estimate_csv(&path, &est)?;
    }
    Ok(if est.shortfall { ExitCode::from(EXIT_SHORTFALL) } else { ExitCode::SUCCESS })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    spec: Option<PathBuf>,
    preset: &str,
    trials: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    print_spec: bool,
    out_dir: &Path,
) -> mpdoa::Result<ExitCode> {
    let mut spec = match spec {
        Some(path) => serde_json::from_reader(BufReader::new(File::open(path)?))?,
        None => match preset {
            "snr" => SweepSpec::snr_sweep(),
            "snapshots" => SweepSpec::snapshot_sweep(),
            other => return Err(DoaError::Config(format!("unknown preset `{other}`"))),
        },
    };
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    if print_spec {
        println!("{}", serde_json::to_string_pretty(&spec)?);
        return Ok(ExitCode::SUCCESS);
    }
    let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let dir = out.unwrap_or_else(|| out_dir.to_path_buf());
    let (files, summary) = run_sweep_to_dir(&spec, jobs, &dir)?;
    println!("method,T,snr_db,mean_mse_deg2,success_rate,trials");
    for row in &summary {
        println!(
            "{},{},{},{:.6e},{:.3},{}",
            row.method, row.t, row.snr_db, row.mean_mse_deg2, row.success_rate, row.trials
        );
    }
    println!("records {}", files.records.display());
    println!("summary {}", files.summary.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_crb(thetas: &[f64], m: usize, t: usize, snr: f64) -> mpdoa::Result<ExitCode> {
    let radians: Vec<f64> = thetas.iter().map(|d| d.to_radians()).collect();
    let bound = crb(&radians, m, t, snr)?;
    if bound.ill_conditioned {
        eprintln!("warning: sources nearly coincide (condition number {:.3e})", bound.condition);
    }
    println!("theta_deg,crb_rad2,crb_deg2,crb_rmse_deg");
    for (deg, var) in thetas.iter().zip(&bound.variances) {
        let deg2 = var.to_degrees().to_degrees();
        println!("{deg},{var:.6e},{deg2:.6e},{:.6e}", deg2.sqrt());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { scene, out } => cmd_simulate(&scene, out, &cli.out_dir),
        Command::Estimate { method, input, generate, scene, k, l, config, out } => {
            cmd_estimate(method, input, generate, &scene, k, l, config, out)
        }
        Command::Sweep { spec, preset, trials, seed, jobs, out, print_spec } => {
            cmd_sweep(spec, &preset, trials, seed, jobs, out, print_spec, &cli.out_dir)
        }
        Command::Crb { thetas, m, t, snr } => cmd_crb(&thetas, m, t, snr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
