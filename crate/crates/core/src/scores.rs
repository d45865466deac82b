//! Residual-based non-conformity scores.
//!
//! Transformation families are scored on the logit scale, beta families on
//! the original scale:
//!
//! | family | Raw            | Pearson                 | Quantile                   |
//! |--------|----------------|-------------------------|----------------------------|
//! | M1     | `|z - l|`      |                         |                            |
//! | M2     |                | `|z - l| / s`           | `|Phi^-1(Phi((z - l)/s))|` |
//! | M3, M4 |                | `|y - mu| / sd(y)`      | `|Phi^-1(F(y; mu, phi))|`  |
//!
//! with `z = logit(y)`, `l` the linear predictor and `F` the beta CDF.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::models::{FittedModel, ModelSpec};
use crate::numeric::{expit, logit_unchecked, norm_cdf, norm_quantile};

/// Lower clamp applied to the tail probability before `Phi^-1` for beta
/// quantile residuals.
pub const QUANTILE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreKind {
    Raw,
    Pearson,
    Quantile,
}

impl ScoreKind {
    pub fn label(self) -> &'static str {
        match self {
            ScoreKind::Raw => "raw",
            ScoreKind::Pearson => "pearson",
            ScoreKind::Quantile => "quantile",
        }
    }

    pub fn is_compatible(self, spec: ModelSpec) -> bool {
        match self {
            ScoreKind::Raw => spec == ModelSpec::TransformHomo,
            ScoreKind::Pearson => spec != ModelSpec::TransformHomo,
            ScoreKind::Quantile => spec != ModelSpec::TransformHomo,
        }
    }

    pub fn check(self, spec: ModelSpec) -> Result<()> {
        if self.is_compatible(spec) {
            Ok(())
        } else {
            Err(Error::IncompatibleScore {
                score: self.label(),
                family: spec.label(),
            })
        }
    }

    /// The score each family uses by default: raw for M1, Pearson for M2,
    /// quantile for the beta families.
    pub fn default_for(spec: ModelSpec) -> Self {
        match spec {
            ModelSpec::TransformHomo => ScoreKind::Raw,
            ModelSpec::TransformHetero => ScoreKind::Pearson,
            _ => ScoreKind::Quantile,
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "r" => Ok(ScoreKind::Raw),
            "pearson" | "p" => Ok(ScoreKind::Pearson),
            "quantile" | "q" => Ok(ScoreKind::Quantile),
            _ => Err(Error::InvalidConfig(format!("unknown score `{s}`"))),
        }
    }
}

/// Non-conformity of response `y` at covariates `x` under `m`.
pub fn score(kind: ScoreKind, y: f64, m: &FittedModel, x: &[f64]) -> Result<f64> {
    kind.check(m.spec)?;
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain {
            function: "score",
            value: y,
        });
    }
    if x.len() != m.p() {
        return Err(Error::DimensionMismatch {
            expected: m.p(),
            got: x.len(),
        });
    }
    let resp = if m.spec.is_transform() {
        logit_unchecked(y)
    } else {
        y
    };
    Ok(score_working(kind, resp, m, x))
}

/// Score of a response already on the model's working scale (`logit(y)` for
/// the transformation families, `y` for the beta families).
#[inline]
pub(crate) fn score_working(kind: ScoreKind, resp: f64, m: &FittedModel, x: &[f64]) -> f64 {
    let lin = m.linear(x);
    match (m.spec.is_transform(), kind) {
        (true, ScoreKind::Raw) => (resp - lin).abs(),
        (true, ScoreKind::Pearson) => (resp - lin).abs() / m.log_dispersion(x).exp(),
        (true, ScoreKind::Quantile) => {
            // Lower tail of the standardized residual keeps full precision.
            let r = (resp - lin).abs() / m.log_dispersion(x).exp();
            let u = norm_cdf(-r).max(f64::MIN_POSITIVE);
            tail_quantile(u)
        }
        (false, ScoreKind::Pearson) => (resp - expit(lin)).abs() / m.sigma(x),
        (false, _) => {
            let phi = m.log_dispersion(x).exp();
            let (a, b) = (expit(lin) * phi, expit(-lin) * phi);
            let lower = beta_reg(a, b, resp);
            let tail = if lower <= 0.5 {
                lower
            } else {
                beta_reg(b, a, 1.0 - resp)
            };
            tail_quantile(tail.max(QUANTILE_CLAMP))
        }
    }
}

/// `|Phi^-1(u)|` for a lower-tail probability `u` in (0, 0.5].
#[inline]
fn tail_quantile(u: f64) -> f64 {
    if u >= 0.5 {
        0.0
    } else {
        norm_quantile(u).map(f64::abs).unwrap_or(f64::INFINITY)
    }
}

/// Scores of every observation of a dataset under `m`.
pub fn score_dataset(
    kind: ScoreKind,
    data: &crate::data::Dataset,
    m: &FittedModel,
) -> Result<Vec<f64>> {
    (0..data.n())
        .map(|i| score(kind, data.y()[i], m, data.row(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_model(mu: f64, phi: f64) -> FittedModel {
        FittedModel::from_params(
            ModelSpec::BetaMean,
            crate::numeric::logit(mu).unwrap(),
            vec![0.0],
            phi.ln(),
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn compatibility_table() {
        use ModelSpec::*;
        assert!(ScoreKind::Raw.is_compatible(TransformHomo));
        for s in [TransformHetero, BetaMean, BetaMeanDisp] {
            assert!(!ScoreKind::Raw.is_compatible(s));
            assert!(ScoreKind::Pearson.is_compatible(s));
            assert!(ScoreKind::Quantile.is_compatible(s));
        }
        let m = beta_model(0.5, 10.0);
        assert!(matches!(
            score(ScoreKind::Raw, 0.4, &m, &[0.0]),
            Err(Error::IncompatibleScore { .. })
        ));
    }

    #[test]
    fn zero_residual() {
        let t = FittedModel::from_params(ModelSpec::TransformHomo, 0.3, vec![0.2], 0.1, vec![0.0])
            .unwrap();
        let y = expit(0.3 + 0.2 * 1.5);
        assert!(score(ScoreKind::Raw, y, &t, &[1.5]).unwrap() < 1e-12);
        let m = beta_model(0.3, 4.0);
        assert!(score(ScoreKind::Pearson, 0.3, &m, &[0.0]).unwrap() < 1e-12);
    }

    #[test]
    fn pearson_beta_value() {
        let m = beta_model(0.5, 10.0);
        let s = score(ScoreKind::Pearson, 0.7, &m, &[0.0]).unwrap();
        let expected = 0.2 / (0.25_f64 / 11.0).sqrt();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 1.3266).abs() < 1e-4);
    }

    #[test]
    fn rejects_boundary_response() {
        let m = beta_model(0.5, 10.0);
        assert!(score(ScoreKind::Quantile, 1.0, &m, &[0.0]).is_err());
        assert!(score(ScoreKind::Quantile, 0.0, &m, &[0.0]).is_err());
    }

    #[test]
    fn far_tail_is_finite() {
        let m = beta_model(0.5, 20.0);
        let s = score(ScoreKind::Quantile, 1e-9, &m, &[0.0]).unwrap();
        assert!(s.is_finite());
        assert!((s - norm_quantile(QUANTILE_CLAMP).unwrap().abs()).abs() < 1e-12);
    }
}
