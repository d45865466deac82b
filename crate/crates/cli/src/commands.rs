use std::fmt;
use std::fs::File;
use std::path::Path;

use betacp::analysis::{self, AnalysisConfig};
use betacp::conformal::{full_cp, split_cp, FullConfig, Method, SplitConfig};
use betacp::data::{load_csv, read_new_data, Dataset, Rescale};
use betacp::models::{fit as fit_model, FitOptions, ModelSpec};
use betacp::scores::ScoreKind;
use betacp::simlab::{
    bootstrap_interval, run_coverage_with, CoverageOptions, Scenario, ScenarioConfig, PHI_LEVELS,
    SIGMA_LEVELS,
};
use betacp::Error;

use crate::output::{write_atomic, write_csv, IntervalRow, PlotRow, SimulationRow, SummaryRow};
use crate::{AnalyzeArgs, DataArgs, FitArgs, IntervalArgs, PredictArgs, SimulateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numeric or fitting.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) => match e {
                Error::InvalidConfig(_)
                | Error::IncompatibleScore { .. }
                | Error::FamilyMismatch { .. } => 1,
                e if e.is_data_error() => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn rescale(args: &DataArgs) -> Result<Option<Rescale>> {
    args.rescale
        .as_deref()
        .map(|v| Rescale::new(v[0], v[1]).map_err(CliError::from))
        .transpose()
}

fn load(args: &DataArgs) -> Result<Dataset> {
    Ok(load_csv(&args.input, rescale(args)?)?)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn interval_method(s: &str) -> Result<Method> {
    match parse(s)? {
        m @ (Method::Split | Method::Full | Method::Bootstrap) => Ok(m),
        m => Err(CliError::Usage(format!("`{m}` is not an interval method"))),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--alpha must lie in (0,1), got {alpha}"
        )))
    }
}

fn full_config(a: &IntervalArgs) -> FullConfig {
    FullConfig {
        alpha: a.alpha,
        tolerance: a.tolerance,
        rho: a.rho,
        grid_step: a.grid_step,
        ..FullConfig::default()
    }
}

pub fn fit(a: FitArgs) -> Result<()> {
    let data = load(&a.data)?;
    let spec: ModelSpec = parse(&a.model)?;
    let model = fit_model(&data, spec, &FitOptions::default())?.ensure_converged()?;
    let doc = serde_json::json!({
        "model": model,
        "covariates": data.covariate_names(),
        "n": data.n(),
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Lib(Error::InvalidData(e.to_string())))?;
    match &a.output {
        Some(path) => write_atomic(path, |w| writeln!(w, "{text}"))?,
        None => println!("{text}"),
    }
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    check_alpha(a.interval.alpha)?;
    let spec: ModelSpec = parse(&a.model)?;
    let kind = match &a.score {
        Some(s) => parse(s)?,
        None => ScoreKind::default_for(spec),
    };
    let method = interval_method(&a.method)?;
    let data = load(&a.data)?;
    let new = read_new_data(File::open(&a.new)?, rescale(&a.data)?)?;
    if new.names != data.covariate_names() {
        return Err(Error::InvalidData(format!(
            "prediction columns {:?} do not match training covariates {:?}",
            new.names,
            data.covariate_names()
        ))
        .into());
    }

    let alpha = a.interval.alpha;
    let split = SplitConfig {
        alpha,
        split_fraction: a.interval.split_fraction,
        rng_seed: a.interval.seed,
    };
    let full = full_config(&a.interval);
    let mut rows = Vec::with_capacity(new.rows.len());
    for (i, x) in new.rows.iter().enumerate() {
        let pi = match method {
            Method::Split => split_cp(&data, x, spec, kind, &split)?,
            Method::Full => full_cp(&data, x, spec, kind, &full)?,
            _ => bootstrap_interval(
                &data,
                x,
                spec,
                alpha,
                a.interval.bootstrap_draws,
                a.interval.seed,
            )?,
        };
        let truth = new.truth.as_ref().map(|t| t[i]);
        rows.push(IntervalRow {
            row: i + 1,
            model: spec.label(),
            score: if method == Method::Bootstrap {
                "-".into()
            } else {
                kind.label().into()
            },
            method: method.label().into(),
            alpha,
            lower: pi.lower,
            upper: pi.upper,
            empty: pi.empty,
            truth,
            covered: truth.map(|t| pi.contains(t)),
        });
    }
    write_csv(&a.output, None, &rows)?;
    if let Some(truth) = &new.truth {
        let covered = rows.iter().filter(|r| r.covered == Some(true)).count();
        println!(
            "coverage {covered}/{} ({:.3})",
            truth.len(),
            covered as f64 / truth.len().max(1) as f64
        );
    }
    Ok(())
}

/// Level for `scenario` from a user value that may name either member of a
/// sigma/phi pair.
fn level_for(scenario: Scenario, level: Option<f64>) -> Result<f64> {
    let Some(v) = level else {
        return Ok(scenario.default_level());
    };
    let pair = |own: &[f64; 4], other: &[f64; 4]| {
        own.iter()
            .position(|l| *l == v)
            .or_else(|| other.iter().position(|l| *l == v))
            .map(|i| own[i])
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "--level {v} is not one of sigma {SIGMA_LEVELS:?} or phi {PHI_LEVELS:?}"
                ))
            })
    };
    match scenario {
        Scenario::S1 => pair(&SIGMA_LEVELS, &PHI_LEVELS),
        Scenario::S3 => pair(&PHI_LEVELS, &SIGMA_LEVELS),
        _ => Ok(scenario.default_level()),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    check_alpha(a.interval.alpha)?;
    let scenarios = a
        .scenarios
        .iter()
        .map(|s| parse::<Scenario>(s))
        .collect::<Result<Vec<_>>>()?;
    let specs = a
        .models
        .iter()
        .map(|s| parse::<ModelSpec>(s))
        .collect::<Result<Vec<_>>>()?;
    let kinds = a
        .scores
        .iter()
        .map(|s| parse::<ScoreKind>(s))
        .collect::<Result<Vec<_>>>()?;
    let methods = a
        .methods
        .iter()
        .map(|s| interval_method(s))
        .collect::<Result<Vec<_>>>()?;
    let combos: Vec<(ModelSpec, ScoreKind)> = specs
        .iter()
        .flat_map(|&m| {
            kinds
                .iter()
                .filter(move |k| k.is_compatible(m))
                .map(move |&k| (m, k))
        })
        .collect();
    if scenarios.is_empty() || combos.is_empty() || methods.is_empty() || a.n.is_empty() {
        return Err(CliError::Usage(
            "the selected scenarios, models, scores, methods and sizes leave an empty grid; \
             e.g. --models m1 --scores raw"
                .into(),
        ));
    }
    let reps = |m: Method| {
        a.reps.unwrap_or(match m {
            Method::Split => a.reps_split,
            Method::Full => a.reps_full,
            _ => a.reps_bootstrap,
        })
    };

    let mut rows = Vec::new();
    for &scenario in &scenarios {
        let level = level_for(scenario, a.level)?;
        for &n in &a.n {
            let cfg = ScenarioConfig {
                scenario,
                n,
                dispersion_level: level,
                rng_seed: a.interval.seed,
            };
            for &(spec, kind) in &combos {
                for &method in &methods {
                    let mut opts = CoverageOptions::new(a.interval.alpha, reps(method));
                    opts.split_fraction = a.interval.split_fraction;
                    opts.full = full_config(&a.interval);
                    opts.bootstrap_draws = a.interval.bootstrap_draws;
                    log::info!("{scenario} n={n} {spec}/{kind} {method}");
                    let r = run_coverage_with(&cfg, spec, kind, method, &opts)?;
                    rows.push(SimulationRow {
                        scenario: scenario.label().into(),
                        model: spec.label().into(),
                        score: kind.label().into(),
                        method: method.label().into(),
                        n,
                        alpha: a.interval.alpha,
                        replications: r.replications,
                        coverage: r.coverage,
                        avg_width: r.avg_width,
                        cpu_mean: r.avg_cpu_seconds,
                        cpu_sd: r.cpu_sd,
                        failures: r.failures_replaced,
                    });
                }
            }
        }
    }
    let comment = format!(
        "betacp {}; replications split={} full={} bootstrap={}; seed={}; S1 sigma={} S3 phi={}",
        env!("CARGO_PKG_VERSION"),
        reps(Method::Split),
        reps(Method::Full),
        reps(Method::Bootstrap),
        a.interval.seed,
        level_for(Scenario::S1, a.level)?,
        level_for(Scenario::S3, a.level)?,
    );
    write_csv(&a.output, Some(&comment), &rows)?;
    Ok(())
}

fn parse_combo(s: &str) -> Result<(ModelSpec, ScoreKind)> {
    let (m, k) = s.split_once(':').ok_or_else(|| {
        CliError::Usage(format!("combination `{s}` should look like m3:quantile"))
    })?;
    let spec: ModelSpec = parse(m)?;
    let kind: ScoreKind = parse(k)?;
    kind.check(spec)?;
    Ok((spec, kind))
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    check_alpha(a.interval.alpha)?;
    let methods = a
        .methods
        .iter()
        .map(|s| interval_method(s))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = AnalysisConfig {
        alpha: a.interval.alpha,
        test_fraction: a.test_fraction,
        seed: a.interval.seed,
        split_fraction: a.interval.split_fraction,
        full: full_config(&a.interval),
        methods,
        bootstrap_draws: a.interval.bootstrap_draws,
        ..AnalysisConfig::default()
    };
    if !a.combos.is_empty() {
        cfg.combos = a
            .combos
            .iter()
            .map(|s| parse_combo(s))
            .collect::<Result<_>>()?;
    }
    let data = load(&a.data)?;
    let report = analysis::analyze(&data, &cfg)?;

    let summary: Vec<SummaryRow> = report
        .summary
        .iter()
        .map(|s| SummaryRow {
            model: s.model.clone(),
            score: s.score.clone(),
            method: s.method.label().into(),
            n_test: s.n_test,
            alpha: cfg.alpha,
            coverage: s.coverage,
            avg_width: s.avg_width,
            empty: s.empty,
        })
        .collect();
    let plot: Vec<PlotRow> = report
        .points
        .iter()
        .map(|p| PlotRow {
            row: p.row,
            model: p.model.clone(),
            score: p.score.clone(),
            method: p.method.label().into(),
            lower: p.lower,
            upper: p.upper,
            truth: p.truth,
            covered: p.covered,
            empty: p.empty,
        })
        .collect();
    let dir = Path::new(&a.output_dir);
    write_csv(&dir.join("results.csv"), None, &summary)?;
    write_csv(&dir.join("plot_data.csv"), None, &plot)?;

    println!(
        "{} construction rows, {} test rows",
        report.construction_size,
        report.test_rows.len()
    );
    println!(
        "{:<6} {:<10} {:<13} {:>8} {:>8}",
        "model", "score", "method", "coverage", "width"
    );
    for s in &summary {
        println!(
            "{:<6} {:<10} {:<13} {:>8.3} {:>8.4}",
            s.model, s.score, s.method, s.coverage, s.avg_width
        );
    }
    Ok(())
}
