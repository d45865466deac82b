use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// Conformal prediction intervals for responses bounded in (0,1).
#[derive(Parser, Debug)]
#[command(name = "betacp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a regression model and print its coefficients as JSON.
    Fit(FitArgs),
    /// Build prediction intervals for new covariate rows.
    Predict(PredictArgs),
    /// Run Monte Carlo coverage experiments over a scenario grid.
    Simulate(SimulateArgs),
    /// Hold out a test set and compare interval methods on a dataset.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// CSV file with a `y` column; every other column is a covariate.
    #[arg(short, long)]
    input: PathBuf,
    /// Map responses from (A, B) onto (0,1) with (y - A) / (B - A).
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    rescale: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model family: m1, m2, m3 or m4.
    #[arg(short, long, default_value = "m3")]
    model: String,
    /// Write the JSON here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct IntervalArgs {
    /// Miscoverage level; intervals target 1 - alpha.
    #[arg(short, long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Calibration share for split conformal prediction.
    #[arg(long, default_value_t = 0.5)]
    split_fraction: f64,
    /// Bisection tolerance for full conformal prediction.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Grid extension factor for full conformal prediction.
    #[arg(long, default_value_t = 3.0)]
    rho: f64,
    /// Logit-scale grid step for full conformal prediction.
    #[arg(long, default_value_t = 1e-4)]
    grid_step: f64,
    /// Resamples per bootstrap interval.
    #[arg(long, default_value_t = 500)]
    bootstrap_draws: usize,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    /// CSV of covariate rows to predict at, with the same column names.
    /// A `y` column, if present, is used to report coverage.
    #[arg(long)]
    new: PathBuf,
    #[arg(short, long, default_value = "m3")]
    model: String,
    /// raw, pearson or quantile; defaults to the family's usual score.
    #[arg(short, long)]
    score: Option<String>,
    /// split, full or bootstrap.
    #[arg(long, default_value = "split")]
    method: String,
    #[command(flatten)]
    interval: IntervalArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Comma-separated scenarios (S1..S4).
    #[arg(long, value_delimiter = ',', default_value = "S1")]
    scenarios: Vec<String>,
    /// Comma-separated model families.
    #[arg(long, value_delimiter = ',', default_value = "m1")]
    models: Vec<String>,
    /// Comma-separated scores; every compatible model/score pair is run.
    #[arg(long, value_delimiter = ',', default_value = "raw,pearson,quantile")]
    scores: Vec<String>,
    /// Comma-separated methods (split, full, bootstrap).
    #[arg(long, value_delimiter = ',', default_value = "split")]
    methods: Vec<String>,
    /// Comma-separated sample sizes.
    #[arg(short, long, value_delimiter = ',', default_value = "100")]
    n: Vec<usize>,
    /// sigma for S1 or phi for S3; the usual 0.63 / 10 when omitted.
    #[arg(long)]
    level: Option<f64>,
    /// Replications for every method, overriding the per-method defaults.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    reps_split: usize,
    #[arg(long, default_value_t = 200)]
    reps_full: usize,
    #[arg(long, default_value_t = 100)]
    reps_bootstrap: usize,
    #[command(flatten)]
    interval: IntervalArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated methods (split, full, bootstrap).
    #[arg(long, value_delimiter = ',', default_value = "split,full")]
    methods: Vec<String>,
    /// Comma-separated model/score pairs such as `m3:quantile`; all six by default.
    #[arg(long, value_delimiter = ',')]
    combos: Vec<String>,
    /// Share of rows held out for evaluation.
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
    #[command(flatten)]
    interval: IntervalArgs,
    /// Directory for results.csv and plot_data.csv.
    #[arg(short, long)]
    output_dir: PathBuf,
}

/// Environment variable that caps the worker threads.
const THREADS_VAR: &str = "BETACP_THREADS";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = configure_threads().and_then(|()| match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Analyze(a) => commands::analyze(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let commands::CliError::Usage(_) = e {
                eprintln!("run `betacp --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), commands::CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = v.parse().ok().filter(|t| *t > 0).ok_or_else(|| {
        commands::CliError::Usage(format!(
            "{THREADS_VAR} must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::CliError::Usage(e.to_string()))
}
