//! Simulation scenarios S1–S4 and Monte Carlo coverage experiments.
//!
//! Covariates are trivariate normal with unit variances and pairwise
//! correlation 0.5. S1/S2 draw logit-normal responses with constant or
//! covariate-dependent standard deviation; S3/S4 draw beta responses with
//! constant or covariate-dependent precision.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Cholesky, Matrix3};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{full_cp, split_cp, FullConfig, Method, PredictionInterval, SplitConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, FitOptions, FittedModel, ModelSpec};
use crate::numeric::expit;
use crate::scores::ScoreKind;

/// Standard deviations available for S1, paired in order with the S3 precisions.
pub const SIGMA_LEVELS: [f64; 4] = [1.5, 0.9, 0.63, 0.45];
pub const PHI_LEVELS: [f64; 4] = [2.0, 5.0, 10.0, 20.0];

const THETA_MAIN: [f64; 4] = [0.5, 0.4, -0.3, 0.3];
const THETA_CONSERVATIVE: [f64; 4] = [0.4, 0.25, -0.2, 0.2];
const ETA_S2: [f64; 4] = [-0.2, 0.06, 0.06, 0.06];
const ETA_S4: [f64; 4] = [1.85, 0.15, 0.15, 0.15];

/// Added to a replication seed each time its fit fails.
pub const SEED_REPLACEMENT_STEP: u64 = 0x9E37_79B9_7F4A_7C15;
const MAX_REPLACEMENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
            Scenario::S4 => "S4",
        }
    }

    /// The model family that generates the data.
    pub fn true_spec(self) -> ModelSpec {
        match self {
            Scenario::S1 => ModelSpec::TransformHomo,
            Scenario::S2 => ModelSpec::TransformHetero,
            Scenario::S3 => ModelSpec::BetaMean,
            Scenario::S4 => ModelSpec::BetaMeanDisp,
        }
    }

    /// sigma = 0.63 for S1, phi = 10 for S3; unused otherwise.
    pub fn default_level(self) -> f64 {
        match self {
            Scenario::S1 => 0.63,
            Scenario::S3 => 10.0,
            _ => f64::NAN,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            "S4" => Ok(Scenario::S4),
            _ => Err(Error::InvalidConfig(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    /// sigma for S1, phi for S3; ignored for S2 and S4.
    pub dispersion_level: f64,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, n: usize, rng_seed: u64) -> Self {
        Self {
            scenario,
            n,
            dispersion_level: scenario.default_level(),
            rng_seed,
        }
    }

    pub fn with_level(mut self, level: f64) -> Result<Self> {
        self.dispersion_level = level;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample size must be positive".into()));
        }
        let allowed: &[f64] = match self.scenario {
            Scenario::S1 => &SIGMA_LEVELS,
            Scenario::S3 => &PHI_LEVELS,
            _ => return Ok(()),
        };
        if allowed.contains(&self.dispersion_level) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{} dispersion level must be one of {allowed:?}, got {}",
                self.scenario, self.dispersion_level
            )))
        }
    }

    /// The data-generating model with its true coefficients.
    pub fn true_model(&self) -> Result<FittedModel> {
        self.validate()?;
        let spec = self.scenario.true_spec();
        let (theta, eta) = match self.scenario {
            Scenario::S1 | Scenario::S3 => {
                let conservative = self.dispersion_level == SIGMA_LEVELS[0]
                    || self.dispersion_level == PHI_LEVELS[0];
                let theta = if conservative {
                    THETA_CONSERVATIVE
                } else {
                    THETA_MAIN
                };
                (theta, [self.dispersion_level.ln(), 0.0, 0.0, 0.0])
            }
            Scenario::S2 => (THETA_CONSERVATIVE, ETA_S2),
            Scenario::S4 => (THETA_CONSERVATIVE, ETA_S4),
        };
        FittedModel::from_params(
            spec,
            theta[0],
            theta[1..].to_vec(),
            eta[0],
            eta[1..].to_vec(),
        )
    }
}

fn covariance_factor() -> Matrix3<f64> {
    let sigma = Matrix3::from_fn(|i, j| if i == j { 1.0 } else { 0.5 });
    Cholesky::new(sigma)
        .expect("compound symmetric matrix is positive definite")
        .l()
}

fn draw_covariates<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let l = covariance_factor();
    let mut x = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let z = nalgebra::Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        x.extend((l * z).iter());
    }
    x
}

/// `n x 3` row-major covariate matrix with rows i.i.d. `N3(0, Sigma)`.
pub fn gen_covariates(n: usize, seed: u64) -> Vec<f64> {
    draw_covariates(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// One response from `truth` at covariates `x`, strictly inside (0,1).
pub fn draw_response<R: Rng>(truth: &FittedModel, x: &[f64], rng: &mut R) -> Result<f64> {
    let lin = truth.theta0 + truth.theta.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let disp = (truth.eta0 + truth.eta.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).exp();
    loop {
        let y = if truth.spec.is_transform() {
            expit(lin + disp * rng.sample::<f64, _>(StandardNormal))
        } else {
            let mu = expit(lin);
            Beta::new(mu * disp, (1.0 - mu) * disp)
                .map_err(|_| Error::InvalidBetaParams { mu, phi: disp })?
                .sample(rng)
        };
        if y > 0.0 && y < 1.0 {
            return Ok(y);
        }
    }
}

/// Responses for the row-major `x` (3 columns) under the scenario.
pub fn gen_response(cfg: &ScenarioConfig, x: &[f64]) -> Result<Vec<f64>> {
    if !x.len().is_multiple_of(3) {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: x.len() % 3,
        });
    }
    let truth = cfg.true_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(1);
    x.chunks_exact(3)
        .map(|row| draw_response(&truth, row, &mut rng))
        .collect()
}

/// A dataset of size `cfg.n` drawn from the scenario.
pub fn generate(cfg: &ScenarioConfig) -> Result<Dataset> {
    let x = gen_covariates(cfg.n, cfg.rng_seed);
    let y = gen_response(cfg, &x)?;
    Dataset::from_flat(y, x, 3)
}

/// Training data plus a single test pair, all drawn from one stream.
fn draw_replication(truth: &FittedModel, n: usize, seed: u64) -> Result<(Dataset, Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = draw_covariates(n + 1, &mut rng);
    let y = x
        .chunks_exact(3)
        .map(|row| draw_response(truth, row, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let x_new = x[3 * n..].to_vec();
    let y_new = y[n];
    let data = Dataset::from_flat(y[..n].to_vec(), x[..3 * n].to_vec(), 3)?;
    Ok((data, x_new, y_new))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub coverage: f64,
    pub covered: usize,
    pub avg_width: f64,
    pub replications: usize,
    pub avg_cpu_seconds: f64,
    pub cpu_sd: f64,
    pub failures_replaced: usize,
}

/// Settings for [`run_coverage_with`] beyond the scenario itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions {
    pub alpha: f64,
    pub replications: usize,
    pub split_fraction: f64,
    pub full: FullConfig,
    /// Resamples per bootstrap interval.
    pub bootstrap_draws: usize,
}

impl CoverageOptions {
    pub fn new(alpha: f64, replications: usize) -> Self {
        Self {
            alpha,
            replications,
            split_fraction: 0.5,
            full: FullConfig::with_alpha(alpha),
            bootstrap_draws: 500,
        }
    }
}

/// Seed of replication `index`, independent of how replications are scheduled.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}

struct Outcome {
    covered: bool,
    width: f64,
    seconds: f64,
    failures: usize,
}

/// Empirical coverage of `method` over independent replications, each with
/// a fresh dataset of size `cfg.n` and a fresh test pair.
pub fn run_coverage(
    cfg: &ScenarioConfig,
    spec: ModelSpec,
    kind: ScoreKind,
    method: Method,
    alpha: f64,
    replications: usize,
) -> Result<CoverageReport> {
    run_coverage_with(
        cfg,
        spec,
        kind,
        method,
        &CoverageOptions::new(alpha, replications),
    )
}

pub fn run_coverage_with(
    cfg: &ScenarioConfig,
    spec: ModelSpec,
    kind: ScoreKind,
    method: Method,
    opts: &CoverageOptions,
) -> Result<CoverageReport> {
    if opts.replications == 0 {
        return Err(Error::InvalidConfig(
            "replications must be at least 1".into(),
        ));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0,1), got {}",
            opts.alpha
        )));
    }
    if !matches!(method, Method::Split | Method::Full | Method::Bootstrap) {
        return Err(Error::InvalidConfig(format!(
            "cannot run coverage for method `{method}`"
        )));
    }
    kind.check(spec)?;
    let truth = cfg.true_model()?;
    let full = FullConfig {
        alpha: opts.alpha,
        ..opts.full
    };

    let one = |index: usize| -> Result<Outcome> {
        let mut seed = replication_seed(cfg.rng_seed, index as u64);
        let mut failures = 0;
        loop {
            let (data, x_new, y_new) = draw_replication(&truth, cfg.n, seed)?;
            let start = Instant::now();
            let pi = match method {
                Method::Split => split_cp(
                    &data,
                    &x_new,
                    spec,
                    kind,
                    &SplitConfig {
                        alpha: opts.alpha,
                        split_fraction: opts.split_fraction,
                        rng_seed: seed,
                    },
                ),
                Method::Full => full_cp(&data, &x_new, spec, kind, &full),
                _ => {
                    bootstrap_interval(&data, &x_new, spec, opts.alpha, opts.bootstrap_draws, seed)
                }
            };
            let seconds = start.elapsed().as_secs_f64();
            match pi {
                Ok(pi) => {
                    return Ok(Outcome {
                        covered: pi.contains(y_new),
                        width: pi.width(),
                        seconds,
                        failures,
                    })
                }
                Err(e) if failures < MAX_REPLACEMENTS && !matches!(e, Error::InvalidConfig(_)) => {
                    log::debug!("replication {index} failed ({e}); replacing seed");
                    failures += 1;
                    seed = seed.wrapping_add(SEED_REPLACEMENT_STEP);
                }
                Err(e) => return Err(e),
            }
        }
    };

    let outcomes = (0..opts.replications)
        .into_par_iter()
        .map(one)
        .collect::<Result<Vec<_>>>()?;

    let r = outcomes.len() as f64;
    let covered = outcomes.iter().filter(|o| o.covered).count();
    let avg_width = outcomes.iter().map(|o| o.width).sum::<f64>() / r;
    let avg_cpu = outcomes.iter().map(|o| o.seconds).sum::<f64>() / r;
    let cpu_sd = if outcomes.len() > 1 {
        (outcomes
            .iter()
            .map(|o| (o.seconds - avg_cpu).powi(2))
            .sum::<f64>()
            / (r - 1.0))
            .sqrt()
    } else {
        0.0
    };
    Ok(CoverageReport {
        coverage: covered as f64 / r,
        covered,
        avg_width,
        replications: outcomes.len(),
        avg_cpu_seconds: avg_cpu,
        cpu_sd,
        failures_replaced: outcomes.iter().map(|o| o.failures).sum(),
    })
}

/// Linear-interpolation empirical quantile of sorted data.
fn percentile(sorted: &[f64], prob: f64) -> f64 {
    let h = prob * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Case-resampling percentile bootstrap prediction interval.
///
/// Each of the `b` resamples is refit and contributes one predictive draw
/// at `x_new`; the interval is formed by the `alpha/2` and `1 - alpha/2`
/// empirical quantiles of those draws. A failing resample is redrawn up to
/// three times before the error is returned.
pub fn bootstrap_interval(
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<PredictionInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if b < 100 {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least 100 resamples, got {b}"
        )));
    }
    data.check_covariates(x_new)?;
    let n = data.n();
    let base = models::fit(data, spec, &FitOptions::default())?.ensure_converged()?;
    let warm = models::warm_start(data, &base);

    let draw = |k: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let mut last = None;
        for _ in 0..4 {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let fit = models::fit(&data.subset(&idx), spec, &FitOptions::warm(warm.clone()))
                .and_then(FittedModel::ensure_converged);
            match fit {
                Ok(m) => return draw_response(&m, x_new, &mut rng),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    };

    let mut draws = (0..b)
        .into_par_iter()
        .map(draw)
        .collect::<Result<Vec<_>>>()?;
    draws.sort_unstable_by(f64::total_cmp);
    Ok(PredictionInterval::new(
        percentile(&draws, alpha / 2.0),
        percentile(&draws, 1.0 - alpha / 2.0),
        1.0 - alpha,
        Method::Bootstrap,
    ))
}

/// Union and intersection envelopes of intervals for one test point.
/// Empty members are ignored by the union and make the intersection empty.
pub fn union_intersection(
    intervals: &[PredictionInterval],
) -> Result<(PredictionInterval, PredictionInterval)> {
    let first = intervals
        .first()
        .ok_or_else(|| Error::InvalidConfig("no intervals to combine".into()))?;
    let level = first.level;
    let live: Vec<&PredictionInterval> = intervals.iter().filter(|pi| !pi.empty).collect();
    if live.is_empty() {
        return Ok((
            PredictionInterval::empty(level, Method::Union),
            PredictionInterval::empty(level, Method::Intersection),
        ));
    }
    let min_lower = live.iter().map(|pi| pi.lower).fold(f64::INFINITY, f64::min);
    let max_upper = live
        .iter()
        .map(|pi| pi.upper)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_lower = live
        .iter()
        .map(|pi| pi.lower)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_upper = live.iter().map(|pi| pi.upper).fold(f64::INFINITY, f64::min);
    let union = PredictionInterval::new(min_lower, max_upper, level, Method::Union);
    let intersection = if live.len() < intervals.len() || max_lower > min_upper {
        PredictionInterval::empty(level, Method::Intersection)
    } else {
        PredictionInterval::new(max_lower, min_upper, level, Method::Intersection)
    };
    Ok((union, intersection))
}
