//! Split and full conformal prediction intervals.
//!
//! Split CP fits once on a training half, takes the conformal quantile of
//! the calibration scores and inverts the score inequality in closed form.
//! Full CP refits on the data augmented with each candidate response; the
//! inclusion region is located by an adaptive bracketing search whose
//! indicator evaluations are memoized per call.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, FitOptions, FittedModel, Likelihood, ModelSpec, WarmStart};
use crate::numeric::{beta_quantile, expit, logit_unchecked, norm_cdf, norm_quantile, BetaParams};
use crate::scores::{score_working, ScoreKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Split,
    Full,
    Bootstrap,
    Union,
    Intersection,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Split => "split",
            Method::Full => "full",
            Method::Bootstrap => "bootstrap",
            Method::Union => "union",
            Method::Intersection => "intersection",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "split" => Ok(Method::Split),
            "full" => Ok(Method::Full),
            "bootstrap" | "boot" => Ok(Method::Bootstrap),
            "union" => Ok(Method::Union),
            "intersection" => Ok(Method::Intersection),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal level `1 - alpha`, as requested.
    pub level: f64,
    pub method: Method,
    pub empty: bool,
}

impl PredictionInterval {
    pub fn new(lower: f64, upper: f64, level: f64, method: Method) -> Self {
        Self {
            lower,
            upper,
            level,
            method,
            empty: false,
        }
    }

    pub fn empty(level: f64, method: Method) -> Self {
        Self {
            lower: f64::NAN,
            upper: f64::NAN,
            level,
            method,
            empty: true,
        }
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    /// Closed-interval membership; an empty interval contains nothing.
    pub fn contains(&self, y: f64) -> bool {
        !self.empty && self.lower <= y && y <= self.upper
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "alpha must lie in (0,1), got {alpha}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub alpha: f64,
    /// Share of the data used for calibration.
    pub split_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            split_fraction: 0.5,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullConfig {
    pub alpha: f64,
    /// Bracket width at which bisection stops (beta families).
    pub tolerance: f64,
    /// Grid extension factor around the Gaussian interval (transformation families).
    pub rho: f64,
    /// Candidate spacing on the logit scale (transformation families).
    pub grid_step: f64,
    /// Cache indicator evaluations. Turning this off only makes sense in tests.
    pub memoize: bool,
    /// Probes outside the located interval that check it is contiguous.
    pub spot_checks: usize,
}

impl Default for FullConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            tolerance: 1e-4,
            rho: 3.0,
            grid_step: 1e-4,
            memoize: true,
            spot_checks: 3,
        }
    }
}

impl FullConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
}

/// Rank of the conformal quantile among `m` scores, `ceil((1 - alpha)(m + 1))`.
pub fn conformal_rank(m: usize, alpha: f64) -> usize {
    // The small offset absorbs representation error such as 0.9 * 10 = 9.000000000000002.
    ((1.0 - alpha) * (m as f64 + 1.0) - 1e-9).ceil().max(1.0) as usize
}

/// The `ceil((1 - alpha)(m + 1))`-th smallest score, or `+inf` when that
/// rank exceeds `m`.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let k = conformal_rank(scores.len(), alpha);
    if k > scores.len() {
        return Ok(f64::INFINITY);
    }
    let mut s = scores.to_vec();
    let (_, kth, _) = s.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Random partition of `0..n` into (training, calibration) index sets.
/// Calibration receives `floor(n * split_fraction)` points.
pub fn split_indices(n: usize, split_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must lie in (0,1), got {split_fraction}"
        )));
    }
    let n_cal = (n as f64 * split_fraction).floor() as usize;
    if n_cal == 0 || n_cal == n {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n} observations with calibration share {split_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cal = idx.split_off(n - n_cal);
    Ok((idx, cal))
}

/// Closed-form solution of `{y : score(y) <= q}` at `x_new`.
pub fn split_interval(
    m: &FittedModel,
    kind: ScoreKind,
    x_new: &[f64],
    q: f64,
    level: f64,
) -> Result<PredictionInterval> {
    kind.check(m.spec)?;
    let mean = m.predict_mean(x_new)?;
    if q.is_infinite() {
        return Ok(PredictionInterval::new(0.0, 1.0, level, Method::Split));
    }
    let lin = m.linear(x_new);
    let (lower, upper) = match (m.spec, kind) {
        (ModelSpec::TransformHomo, _) => (expit(lin - q), expit(lin + q)),
        (ModelSpec::TransformHetero, _) => {
            let s = m.sigma(x_new);
            (expit(lin - q * s), expit(lin + q * s))
        }
        (_, ScoreKind::Pearson) => {
            let s = m.sigma(x_new);
            ((mean - q * s).max(0.0), (mean + q * s).min(1.0))
        }
        (_, _) => {
            let phi = m.predict_phi(x_new)?;
            let tail = norm_cdf(-q);
            if tail <= 0.0 {
                (0.0, 1.0)
            } else {
                let lower = beta_quantile(tail, BetaParams::new(mean, phi)?)?;
                // Upper bound through the reflected distribution, which keeps
                // precision when the upper tail is thin.
                let upper = 1.0 - beta_quantile(tail, BetaParams::new(expit(-lin), phi)?)?;
                (lower, upper)
            }
        }
    };
    Ok(PredictionInterval::new(lower, upper, level, Method::Split))
}

/// Split conformal prediction interval at `x_new`.
pub fn split_cp(
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    kind: ScoreKind,
    cfg: &SplitConfig,
) -> Result<PredictionInterval> {
    check_alpha(cfg.alpha)?;
    kind.check(spec)?;
    data.check_covariates(x_new)?;
    let (train, cal) = split_indices(data.n(), cfg.split_fraction, cfg.rng_seed)?;
    let train = data.subset(&train);
    let cal = data.subset(&cal);
    let model = models::fit(&train, spec, &FitOptions::default())?.ensure_converged()?;
    let scores: Vec<f64> = (0..cal.n())
        .map(|i| {
            let y = cal.y()[i];
            let resp = if spec.is_transform() {
                logit_unchecked(y)
            } else {
                y
            };
            score_working(kind, resp, &model, cal.row(i))
        })
        .collect();
    let q = conformal_quantile(&scores, cfg.alpha)?;
    split_interval(&model, kind, x_new, q, 1.0 - cfg.alpha)
}

/// Gaussian prediction interval for `logit(y_new)`:
/// `l +- Phi^-1(1 - alpha/2) * sigma`.
pub fn classical_gauss_interval(m: &FittedModel, x_new: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let lin = m.predict_linear(x_new)?;
    let half = norm_quantile(1.0 - alpha / 2.0)? * m.sigma(x_new);
    Ok((lin - half, lin + half))
}

/// Refits on the dataset augmented with a candidate at `x_new` and decides
/// conformal inclusion. Candidates are on the model's working scale.
struct Augmented {
    spec: ModelSpec,
    kind: ScoreKind,
    alpha: f64,
    p: usize,
    x: Vec<f64>,
    resp: Vec<f64>,
    warm: Option<WarmStart>,
    memo: Option<HashMap<u64, bool>>,
    evaluations: usize,
}

impl Augmented {
    fn new(
        data: &Dataset,
        x_new: &[f64],
        spec: ModelSpec,
        kind: ScoreKind,
        alpha: f64,
        warm: Option<WarmStart>,
        memoize: bool,
    ) -> Self {
        let mut x = data.x().to_vec();
        x.extend_from_slice(x_new);
        let mut resp: Vec<f64> = if spec.is_transform() {
            data.y().iter().map(|&y| logit_unchecked(y)).collect()
        } else {
            data.y().to_vec()
        };
        resp.push(f64::NAN);
        Self {
            spec,
            kind,
            alpha,
            p: data.p(),
            x,
            resp,
            warm,
            memo: memoize.then(HashMap::new),
            evaluations: 0,
        }
    }

    fn indicator(&mut self, key: u64, candidate: f64) -> Result<bool> {
        if let Some(&hit) = self.memo.as_ref().and_then(|m| m.get(&key)) {
            return Ok(hit);
        }
        let out = self.evaluate(candidate)?;
        if let Some(m) = self.memo.as_mut() {
            m.insert(key, out);
        }
        Ok(out)
    }

    fn evaluate(&mut self, candidate: f64) -> Result<bool> {
        self.evaluations += 1;
        let n1 = self.resp.len();
        self.resp[n1 - 1] = candidate;
        let lik = if self.spec.is_transform() {
            Likelihood::on_logit_scale(self.spec, &self.x, self.p, self.resp.clone())
        } else {
            Likelihood::on_unit_scale(self.spec, &self.x, self.p, &self.resp)
        };
        let opts = FitOptions {
            warm_start: self.warm.clone(),
            ..FitOptions::default()
        };
        let model = models::fit_likelihood(&lik, &opts)?.ensure_converged()?;
        let p = self.p;
        let scores: Vec<f64> = (0..n1)
            .map(|i| score_working(self.kind, self.resp[i], &model, &self.x[i * p..(i + 1) * p]))
            .collect();
        let q = conformal_quantile(&scores, self.alpha)?;
        Ok(scores[n1 - 1] <= q)
    }
}

/// Conformal inclusion of candidate response `candidate` in (0,1): refit on
/// the augmented data and compare its score with the rank-
/// `ceil((1 - alpha)(n + 1))` score among all `n + 1`.
pub fn indicator(
    candidate: f64,
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    kind: ScoreKind,
    alpha: f64,
) -> Result<bool> {
    check_alpha(alpha)?;
    kind.check(spec)?;
    data.check_covariates(x_new)?;
    if !(candidate > 0.0 && candidate < 1.0) {
        return Err(Error::Domain {
            function: "indicator",
            value: candidate,
        });
    }
    let resp = if spec.is_transform() {
        logit_unchecked(candidate)
    } else {
        candidate
    };
    Augmented::new(data, x_new, spec, kind, alpha, None, false).evaluate(resp)
}

/// Full-CP interval together with search diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullCpReport {
    pub interval: PredictionInterval,
    /// Number of refits performed.
    pub evaluations: usize,
    /// A probe outside the located interval was itself included.
    pub non_contiguous: bool,
}

/// Full conformal prediction interval at `x_new`.
pub fn full_cp(
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    kind: ScoreKind,
    cfg: &FullConfig,
) -> Result<PredictionInterval> {
    full_cp_detailed(data, x_new, spec, kind, cfg).map(|r| r.interval)
}

pub fn full_cp_detailed(
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    kind: ScoreKind,
    cfg: &FullConfig,
) -> Result<FullCpReport> {
    check_alpha(cfg.alpha)?;
    kind.check(spec)?;
    data.check_covariates(x_new)?;
    if !(cfg.tolerance > 0.0 && cfg.rho > 0.0 && cfg.grid_step > 0.0) {
        return Err(Error::InvalidConfig(
            "tolerance, rho and grid step must be positive".into(),
        ));
    }
    let base = models::fit(data, spec, &FitOptions::default())?.ensure_converged()?;
    let warm = models::warm_start(data, &base);
    let mut aug = Augmented::new(data, x_new, spec, kind, cfg.alpha, Some(warm), cfg.memoize);
    let level = 1.0 - cfg.alpha;

    let found = if spec.is_transform() {
        grid_search(&mut aug, &base, x_new, cfg)?
    } else {
        unit_search(&mut aug, base.predict_mean(x_new)?, cfg.tolerance)?
    };
    let Some((lo, hi)) = found else {
        return Ok(FullCpReport {
            interval: PredictionInterval::empty(level, Method::Full),
            evaluations: aug.evaluations,
            non_contiguous: false,
        });
    };

    let non_contiguous = spot_check(&mut aug, lo, hi, cfg.spot_checks)?;
    if non_contiguous {
        log::warn!(
            "full CP inclusion region is not an interval around [{lo}, {hi}] (model {spec}, score {kind})"
        );
    }
    let (lower, upper) = if spec.is_transform() {
        (expit(lo), expit(hi))
    } else {
        (lo, hi)
    };
    Ok(FullCpReport {
        interval: PredictionInterval::new(lower, upper, level, Method::Full),
        evaluations: aug.evaluations,
        non_contiguous,
    })
}

/// Probe points outside `[lo, hi]` (on the working scale); true when any is included.
fn spot_check(aug: &mut Augmented, lo: f64, hi: f64, probes: usize) -> Result<bool> {
    if probes == 0 {
        return Ok(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let (left, right) = if aug.spec.is_transform() {
        let w = (hi - lo).max(1.0);
        ((lo - 3.0 * w, lo), (hi, hi + 3.0 * w))
    } else {
        ((0.0, lo), (hi, 1.0))
    };
    let total = (left.1 - left.0) + (right.1 - right.0);
    for _ in 0..probes {
        let u: f64 = rng.random::<f64>() * total;
        let c = if u < left.1 - left.0 {
            left.0 + u
        } else {
            right.0 + (u - (left.1 - left.0))
        };
        let inside = if aug.spec.is_transform() {
            c.is_finite()
        } else {
            c > 0.0 && c < 1.0
        };
        if inside && c != lo && c != hi && aug.indicator(c.to_bits(), c)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Adaptive search on (0,1) for the beta families. Returns the outermost
/// candidates known to be included.
fn unit_search(aug: &mut Augmented, w0: f64, tol: f64) -> Result<Option<(f64, f64)>> {
    let mut eval = |w: f64| aug.indicator(w.to_bits(), w);

    // Transition from `out` (excluded) to `inn` (included), either direction.
    let bisect =
        |eval: &mut dyn FnMut(f64) -> Result<bool>, mut out: f64, mut inn: f64| -> Result<f64> {
            while (inn - out).abs() > tol {
                let mid = 0.5 * (out + inn);
                if eval(mid)? {
                    inn = mid;
                } else {
                    out = mid;
                }
            }
            Ok(inn)
        };

    if w0 > 0.0 && w0 < 1.0 && eval(w0)? {
        let lo = bisect(&mut eval, 0.0, w0)?;
        let hi = bisect(&mut eval, 1.0, w0)?;
        return Ok(Some((lo, hi)));
    }

    // Coarse grid with the endpoints pinned to excluded, refined by midpoints.
    let mut grid = vec![0.0, 0.5, 1.0];
    let mut fresh = vec![1usize];
    loop {
        for &i in &fresh {
            if eval(grid[i])? {
                let lo = bisect(&mut eval, grid[i - 1], grid[i])?;
                let hi = bisect(&mut eval, grid[i + 1], grid[i])?;
                return Ok(Some((lo, hi)));
            }
        }
        if grid[1] - grid[0] < tol {
            return Ok(None);
        }
        let mut refined = Vec::with_capacity(2 * grid.len() - 1);
        fresh.clear();
        for pair in grid.windows(2) {
            refined.push(pair[0]);
            fresh.push(refined.len());
            refined.push(0.5 * (pair[0] + pair[1]));
        }
        refined.push(1.0);
        grid = refined;
    }
}

/// Index search on the logit-scale candidate grid for the transformation
/// families. Returns the outermost included grid values.
fn grid_search(
    aug: &mut Augmented,
    base: &FittedModel,
    x_new: &[f64],
    cfg: &FullConfig,
) -> Result<Option<(f64, f64)>> {
    let (l, u) = classical_gauss_interval(base, x_new, cfg.alpha)?;
    let start = l - cfg.rho * (u - l);
    let end = u + cfg.rho * (u - l);
    let last = ((end - start) / cfg.grid_step + 1e-9).floor() as usize;
    if last < 2 {
        return Err(Error::InvalidConfig(
            "candidate grid has fewer than three points".into(),
        ));
    }
    let value = |k: usize| start + k as f64 * cfg.grid_step;
    let mut eval = |k: usize| -> Result<bool> {
        if k == 0 || k == last {
            return Ok(false);
        }
        aug.indicator(k as u64, value(k))
    };

    let bisect = |eval: &mut dyn FnMut(usize) -> Result<bool>,
                  mut out: usize,
                  mut inn: usize|
     -> Result<usize> {
        while out.abs_diff(inn) > 1 {
            let mid = (out + inn) / 2;
            if eval(mid)? {
                inn = mid;
            } else {
                out = mid;
            }
        }
        Ok(inn)
    };

    let mut grid = vec![0usize, last];
    loop {
        let mut refined = Vec::with_capacity(2 * grid.len());
        let mut fresh = Vec::new();
        for pair in grid.windows(2) {
            refined.push(pair[0]);
            if pair[1] - pair[0] > 1 {
                fresh.push(refined.len());
                refined.push((pair[0] + pair[1]) / 2);
            }
        }
        refined.push(last);
        if fresh.is_empty() {
            return Ok(None);
        }
        grid = refined;
        for &i in &fresh {
            let k = grid[i];
            if eval(k)? {
                let lo = bisect(&mut eval, grid[i - 1], k)?;
                let hi = bisect(&mut eval, grid[i + 1], k)?;
                return Ok(Some((value(lo), value(hi))));
            }
        }
    }
}
