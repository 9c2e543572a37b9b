//! The `byzweight` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad arguments or config,
//! 3 no truncation curve, 4 sample not certified, 5 objective bound violated.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_distr::{Distribution, StandardNormal};

use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::experiment::{build_workload, run_grid, scenarios, summary_csv, write_results};
use crate::rng::{self, tag};
use crate::sample_check::{certify_population, SampleCheckParams, SampleCheckResult};
use crate::task::{objective_gap_bound, Model, ParamVector};
use crate::weights::{parse_rational, tradeoff_report, WeightVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NOT_CERTIFIED: i32 = 4;
pub const EXIT_BOUND_VIOLATED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "byzweight", version, about = "Robust client weighting for federated learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report (alpha, U*) pairs for a declared-size file.
    Tradeoff {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long = "alpha-star")]
        alpha_star: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a truncation bound from a random sample of the declared sizes.
    Certify {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: String,
        #[arg(long = "alpha-star")]
        alpha_star: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        u: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the objective-gap bound at a random model.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        u: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the experiment grid and write one metrics CSV per cell.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
}

/// A failure carrying the exit status it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidProportion(_)
            | Error::AlphaTooSmall { .. }
            | Error::EmptyWeights
            | Error::ZeroTotalWeight
            | Error::DuplicateId(_) => EXIT_USAGE,
            Error::PreprocessInfeasible => EXIT_INFEASIBLE,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

fn read_weights(path: &Path) -> Result<WeightVector, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    Ok(WeightVector::parse_weights_file(&text)?)
}

fn rational_arg(name: &str, text: &str) -> Result<crate::weights::Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::new(EXIT_USAGE, format!("--{name}: {e}")))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))
}

fn cmd_tradeoff(weights: &Path, alpha_star: &str, out_file: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let v = read_weights(weights)?;
    let alpha_star = rational_arg("alpha-star", alpha_star)?;
    let curve = tradeoff_report(&v, &alpha_star)?;
    if curve.is_empty() {
        return Err(Failure::new(
            EXIT_INFEASIBLE,
            "no alpha on the grid needs a feasible truncation (weights too even, or alpha* too small)",
        ));
    }
    match out_file {
        Some(path) => fs::write(path, curve.to_csv()).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?,
        None => emit(out, &curve.to_csv())?,
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    weights: &Path,
    k: usize,
    alpha: &str,
    alpha_star: &str,
    delta: f64,
    u: u64,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let v = read_weights(weights)?;
    let params = SampleCheckParams::new(k, rational_arg("alpha", alpha)?, rational_arg("alpha-star", alpha_star)?, delta, u)?;
    let result = certify_population(&v, &params, seed)?;
    emit(out, &format!("{}\n{}\n", SampleCheckResult::CSV_HEADER, result.to_csv_row()))?;
    Ok(if result.certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

/// Declared sizes follow the first attack scenario of the config; `w` is
/// standard normal per coordinate.
fn cmd_bound(config: &Path, u: u64, seed: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    if u == 0 {
        return Err(Failure::new(EXIT_USAGE, "--u must be positive"));
    }
    let workload = build_workload(&cfg)?;
    let clients = workload.clients_for(scenarios(&cfg)[0], &cfg);
    let shards: Vec<_> = clients.iter().map(|c| c.data.clone()).collect();
    let declared: Vec<u64> = clients.iter().map(|c| c.declared_size).collect();
    let mut rng = rng::stream(seed, &[tag::BOUND_W]);
    let w = ParamVector::new(
        (0..workload.model.param_count()).map(|_| StandardNormal.sample(&mut rng)).collect(),
    );
    let bound = objective_gap_bound(&workload.model, &w, &shards, &declared, u)?;
    emit(out, &format!("lhs,rhs\n{},{}\n", bound.lhs, bound.rhs))?;
    Ok(if bound.holds(1e-9) { EXIT_OK } else { EXIT_BOUND_VIOLATED })
}

fn cmd_simulate(config: &Path, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let results = run_grid(&cfg)?;
    write_results(&dir, &results)?;
    emit(out, &summary_csv(&results))?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Tradeoff { weights, alpha_star, out: file } => cmd_tradeoff(&weights, &alpha_star, file.as_deref(), out),
        Command::Certify { weights, k, alpha, alpha_star, delta, u, seed } => {
            cmd_certify(&weights, k, &alpha, &alpha_star, delta, u, seed, out)
        }
        Command::Bound { config, u, seed } => cmd_bound(&config, u, seed, out),
        Command::Simulate { config, out_dir } => cmd_simulate(&config, out_dir.as_deref(), out),
    }
}

/// Parse `args` (program name first), run the command and return the exit
/// status. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "byzweight: {}", f.message);
            f.code
        }
    }
}
