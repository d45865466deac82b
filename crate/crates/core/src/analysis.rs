//! Real-data workflow: hold out a test set, build intervals for every test
//! point under several model/score/method combinations, and summarize
//! coverage and width together with union/intersection envelopes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{full_cp, split_cp, FullConfig, Method, PredictionInterval, SplitConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::scores::ScoreKind;
use crate::simlab::{bootstrap_interval, union_intersection};

/// The six model/score pairings: M1 raw, M2 Pearson, and both scores for M3 and M4.
pub const DEFAULT_COMBOS: [(ModelSpec, ScoreKind); 6] = [
    (ModelSpec::TransformHomo, ScoreKind::Raw),
    (ModelSpec::TransformHetero, ScoreKind::Pearson),
    (ModelSpec::BetaMean, ScoreKind::Pearson),
    (ModelSpec::BetaMean, ScoreKind::Quantile),
    (ModelSpec::BetaMeanDisp, ScoreKind::Pearson),
    (ModelSpec::BetaMeanDisp, ScoreKind::Quantile),
];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub split_fraction: f64,
    pub full: FullConfig,
    pub combos: Vec<(ModelSpec, ScoreKind)>,
    /// Any of split, full and bootstrap.
    pub methods: Vec<Method>,
    pub bootstrap_draws: usize,
    /// Emit union/intersection envelopes across the combinations.
    pub envelopes: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            test_fraction: 0.1,
            seed: 0,
            split_fraction: 0.5,
            full: FullConfig::default(),
            combos: DEFAULT_COMBOS.to_vec(),
            methods: vec![Method::Split, Method::Full],
            bootstrap_draws: 500,
            envelopes: true,
        }
    }
}

/// One interval for one held-out observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointInterval {
    /// 1-based row of the observation in the input data.
    pub row: usize,
    pub model: String,
    pub score: String,
    pub method: Method,
    pub lower: f64,
    pub upper: f64,
    pub truth: f64,
    pub covered: bool,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub score: String,
    pub method: Method,
    pub n_test: usize,
    pub coverage: f64,
    pub avg_width: f64,
    pub empty: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub construction_size: usize,
    /// 1-based rows of the test observations.
    pub test_rows: Vec<usize>,
    pub points: Vec<PointInterval>,
    pub summary: Vec<SummaryRow>,
}

/// Random (construction, test) partition of `0..n`; the test set has
/// `ceil(n * test_fraction)` observations.
pub fn holdout_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let n_test = (n as f64 * test_fraction).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidConfig(format!(
            "cannot hold out {n_test} of {n} observations"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

fn point(
    row: usize,
    model: &str,
    score: &str,
    pi: &PredictionInterval,
    truth: f64,
) -> PointInterval {
    PointInterval {
        row,
        model: model.to_owned(),
        score: score.to_owned(),
        method: pi.method,
        lower: pi.lower,
        upper: pi.upper,
        truth,
        covered: pi.contains(truth),
        empty: pi.empty,
    }
}

/// Runs the hold-out workflow on `data`.
pub fn analyze(data: &Dataset, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    if cfg.methods.is_empty() || cfg.combos.is_empty() {
        return Err(Error::InvalidConfig(
            "nothing to analyze: empty model or method selection".into(),
        ));
    }
    if let Some(m) = cfg
        .methods
        .iter()
        .find(|m| !matches!(m, Method::Split | Method::Full | Method::Bootstrap))
    {
        return Err(Error::InvalidConfig(format!(
            "`{m}` is not an interval method"
        )));
    }
    for &(spec, kind) in &cfg.combos {
        kind.check(spec)?;
    }
    let (build_idx, test_idx) = holdout_split(data.n(), cfg.test_fraction, cfg.seed)?;
    let build = data.subset(&build_idx);
    let full = FullConfig {
        alpha: cfg.alpha,
        ..cfg.full
    };
    let split = SplitConfig {
        alpha: cfg.alpha,
        split_fraction: cfg.split_fraction,
        rng_seed: cfg.seed,
    };

    // Conformal jobs in a fixed order: method, combination, test point.
    let mut jobs = Vec::new();
    for &method in cfg.methods.iter().filter(|m| **m != Method::Bootstrap) {
        for &(spec, kind) in &cfg.combos {
            for &t in &test_idx {
                jobs.push((method, spec, kind, t));
            }
        }
    }
    let conformal = jobs
        .par_iter()
        .map(|&(method, spec, kind, t)| {
            let x_new = data.row(t);
            let pi = if method == Method::Split {
                split_cp(&build, x_new, spec, kind, &split)?
            } else {
                full_cp(&build, x_new, spec, kind, &full)?
            };
            Ok(point(t + 1, spec.label(), kind.label(), &pi, data.y()[t]))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = conformal;
    if cfg.methods.contains(&Method::Bootstrap) {
        let mut specs: Vec<ModelSpec> = cfg.combos.iter().map(|c| c.0).collect();
        specs.dedup();
        for spec in specs {
            for &t in &test_idx {
                let pi = bootstrap_interval(
                    &build,
                    data.row(t),
                    spec,
                    cfg.alpha,
                    cfg.bootstrap_draws,
                    cfg.seed,
                )?;
                points.push(point(t + 1, spec.label(), "-", &pi, data.y()[t]));
            }
        }
    }

    if cfg.envelopes {
        for &method in cfg.methods.iter().filter(|m| **m != Method::Bootstrap) {
            for &t in &test_idx {
                let members: Vec<PredictionInterval> = points
                    .iter()
                    .filter(|p| p.method == method && p.row == t + 1 && p.score != "-")
                    .map(|p| PredictionInterval {
                        lower: p.lower,
                        upper: p.upper,
                        level: 1.0 - cfg.alpha,
                        method,
                        empty: p.empty,
                    })
                    .collect();
                let (u, i) = union_intersection(&members)?;
                let truth = data.y()[t];
                points.push(point(t + 1, "all", method.label(), &u, truth));
                points.push(point(t + 1, "all", method.label(), &i, truth));
            }
        }
    }

    let mut summary: Vec<SummaryRow> = Vec::new();
    for p in &points {
        let key = (&p.model, &p.score, p.method);
        if summary
            .iter()
            .any(|s| (&s.model, &s.score, s.method) == key)
        {
            continue;
        }
        let group: Vec<&PointInterval> = points
            .iter()
            .filter(|q| (&q.model, &q.score, q.method) == key)
            .collect();
        let m = group.len() as f64;
        summary.push(SummaryRow {
            model: p.model.clone(),
            score: p.score.clone(),
            method: p.method,
            n_test: group.len(),
            coverage: group.iter().filter(|q| q.covered).count() as f64 / m,
            avg_width: group
                .iter()
                .map(|q| if q.empty { 0.0 } else { q.upper - q.lower })
                .sum::<f64>()
                / m,
            empty: group.iter().filter(|q| q.empty).count(),
        });
    }

    Ok(AnalysisReport {
        construction_size: build.n(),
        test_rows: test_idx.iter().map(|t| t + 1).collect(),
        points,
        summary,
    })
}
