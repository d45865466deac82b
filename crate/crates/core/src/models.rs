//! The four regression families for responses in (0,1), fitted by maximum
//! likelihood.
//!
//! * `TransformHomo` (M1): `logit(y) = theta0 + x'theta + e`, `e ~ N(0, sigma^2)`.
//! * `TransformHetero` (M2): as M1 with `log sigma_i = eta0 + x'eta`.
//! * `BetaMean` (M3): `y ~ Beta(mu_i, phi)` with `logit(mu_i) = theta0 + x'theta`.
//! * `BetaMeanDisp` (M4): as M3 with `log phi_i = eta0 + x'eta`.
//!
//! The dispersion parameter is always optimized on the log scale. For the
//! homoscedastic families `eta0` holds `log sigma` (M1) or `log phi` (M3) and
//! `eta` is identically zero.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{expit, logit_unchecked};
use crate::optim::{self, BfgsOptions, Objective};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelSpec {
    /// M1: homoscedastic logit-normal regression.
    TransformHomo,
    /// M2: heteroscedastic logit-normal regression.
    TransformHetero,
    /// M3: beta regression with covariates on the mean.
    BetaMean,
    /// M4: beta regression with covariates on mean and precision.
    BetaMeanDisp,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 4] = [
        ModelSpec::TransformHomo,
        ModelSpec::TransformHetero,
        ModelSpec::BetaMean,
        ModelSpec::BetaMeanDisp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelSpec::TransformHomo => "M1",
            ModelSpec::TransformHetero => "M2",
            ModelSpec::BetaMean => "M3",
            ModelSpec::BetaMeanDisp => "M4",
        }
    }

    pub fn is_transform(self) -> bool {
        matches!(self, ModelSpec::TransformHomo | ModelSpec::TransformHetero)
    }

    pub fn is_heteroscedastic(self) -> bool {
        matches!(self, ModelSpec::TransformHetero | ModelSpec::BetaMeanDisp)
    }

    /// Length of the packed parameter vector for `p` covariates.
    pub fn n_params(self, p: usize) -> usize {
        if self.is_heteroscedastic() {
            2 * (p + 1)
        } else {
            p + 2
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "transform" | "transform-homo" => Ok(ModelSpec::TransformHomo),
            "m2" | "transform-hetero" => Ok(ModelSpec::TransformHetero),
            "m3" | "beta" | "beta-mean" => Ok(ModelSpec::BetaMean),
            "m4" | "beta-mean-disp" => Ok(ModelSpec::BetaMeanDisp),
            _ => Err(Error::InvalidConfig(format!("unknown model `{s}`"))),
        }
    }
}

/// Starting point for a refit, typically the fit on a closely related dataset.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub params: Vec<f64>,
    /// Row-major inverse Hessian of the average negative log-likelihood.
    pub inv_hessian: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Tolerance on the infinity-norm of the gradient of the average
    /// negative log-likelihood.
    pub gtol: f64,
    pub warm_start: Option<WarmStart>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-6,
            warm_start: None,
        }
    }
}

impl FitOptions {
    pub fn warm(ws: WarmStart) -> Self {
        Self {
            warm_start: Some(ws),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub theta0: f64,
    pub theta: Vec<f64>,
    pub eta0: f64,
    pub eta: Vec<f64>,
    /// Log-likelihood at the stored parameters; NaN for hand-built models.
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FittedModel {
    /// A model with the given coefficients, not tied to any data.
    pub fn from_params(
        spec: ModelSpec,
        theta0: f64,
        theta: Vec<f64>,
        eta0: f64,
        eta: Vec<f64>,
    ) -> Result<Self> {
        if eta.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                got: eta.len(),
            });
        }
        if !spec.is_heteroscedastic() && eta.iter().any(|&e| e != 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{spec} has no dispersion covariates"
            )));
        }
        let all = std::iter::once(&theta0)
            .chain(&theta)
            .chain(std::iter::once(&eta0))
            .chain(&eta);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite coefficient".into()));
        }
        Ok(Self {
            spec,
            theta0,
            theta,
            eta0,
            eta,
            loglik: f64::NAN,
            converged: false,
            iterations: 0,
        })
    }

    fn from_packed(spec: ModelSpec, p: usize, v: &[f64]) -> Self {
        let eta = if spec.is_heteroscedastic() {
            v[p + 2..].to_vec()
        } else {
            vec![0.0; p]
        };
        Self {
            spec,
            theta0: v[0],
            theta: v[1..=p].to_vec(),
            eta0: v[p + 1],
            eta,
            loglik: f64::NAN,
            converged: false,
            iterations: 0,
        }
    }

    /// Packed parameters `[theta0, theta.., eta0, eta..]`; `eta` is omitted
    /// for the homoscedastic families.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.spec.n_params(self.p()));
        v.push(self.theta0);
        v.extend_from_slice(&self.theta);
        v.push(self.eta0);
        if self.spec.is_heteroscedastic() {
            v.extend_from_slice(&self.eta);
        }
        v
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                grad_norm: f64::NAN,
            })
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.p() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.p(),
                got: x.len(),
            })
        }
    }

    #[inline]
    pub(crate) fn linear(&self, x: &[f64]) -> f64 {
        self.theta0 + dot(&self.theta, x)
    }

    #[inline]
    pub(crate) fn log_dispersion(&self, x: &[f64]) -> f64 {
        if self.spec.is_heteroscedastic() {
            self.eta0 + dot(&self.eta, x)
        } else {
            self.eta0
        }
    }

    /// `theta0 + x'theta` on the logit scale (transformation families).
    pub fn predict_linear(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if !self.spec.is_transform() {
            return Err(Error::FamilyMismatch {
                operation: "predict_linear",
                family: self.spec.label(),
            });
        }
        Ok(self.linear(x))
    }

    /// `expit(theta0 + x'theta)`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(expit(self.linear(x)))
    }

    /// Conditional standard deviation: of `logit(y)` for the transformation
    /// families, of `y` itself for the beta families.
    pub fn predict_sigma(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.sigma(x))
    }

    #[inline]
    pub(crate) fn sigma(&self, x: &[f64]) -> f64 {
        if self.spec.is_transform() {
            self.log_dispersion(x).exp()
        } else {
            let lin = self.linear(x);
            let phi = self.log_dispersion(x).exp();
            (expit(lin) * expit(-lin) / (1.0 + phi)).sqrt()
        }
    }

    /// Beta precision at `x` (beta families).
    pub fn predict_phi(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if self.spec.is_transform() {
            return Err(Error::FamilyMismatch {
                operation: "predict_phi",
                family: self.spec.label(),
            });
        }
        Ok(self.log_dispersion(x).exp())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum Response {
    Logit(Vec<f64>),
    Beta {
        y: Vec<f64>,
        ln_y: Vec<f64>,
        ln_1my: Vec<f64>,
    },
}

/// Average negative log-likelihood over a dataset, with analytic gradient.
pub(crate) struct Likelihood<'a> {
    spec: ModelSpec,
    p: usize,
    x: &'a [f64],
    resp: Response,
}

impl<'a> Likelihood<'a> {
    pub(crate) fn new(data: &'a Dataset, spec: ModelSpec) -> Self {
        if spec.is_transform() {
            let z = data.y().iter().map(|&y| logit_unchecked(y)).collect();
            Self::on_logit_scale(spec, data.x(), data.p(), z)
        } else {
            Self::on_unit_scale(spec, data.x(), data.p(), data.y())
        }
    }

    /// Transformation families with responses already mapped to `logit(y)`.
    pub(crate) fn on_logit_scale(spec: ModelSpec, x: &'a [f64], p: usize, z: Vec<f64>) -> Self {
        debug_assert!(spec.is_transform());
        Self {
            spec,
            p,
            x,
            resp: Response::Logit(z),
        }
    }

    pub(crate) fn on_unit_scale(spec: ModelSpec, x: &'a [f64], p: usize, y: &[f64]) -> Self {
        debug_assert!(!spec.is_transform());
        Self {
            spec,
            p,
            x,
            resp: Response::Beta {
                y: y.to_vec(),
                ln_y: y.iter().map(|y| y.ln()).collect(),
                ln_1my: y.iter().map(|y| (-y).ln_1p()).collect(),
            },
        }
    }

    fn n(&self) -> usize {
        match &self.resp {
            Response::Logit(z) => z.len(),
            Response::Beta { ln_y, .. } => ln_y.len(),
        }
    }

    /// Responses on the logit scale, used for least-squares starting values.
    fn logit_response(&self) -> Vec<f64> {
        match &self.resp {
            Response::Logit(z) => z.clone(),
            Response::Beta { ln_y, ln_1my, .. } => {
                ln_y.iter().zip(ln_1my).map(|(a, b)| a - b).collect()
            }
        }
    }

    fn unit_response(&self, i: usize) -> f64 {
        match &self.resp {
            Response::Logit(z) => expit(z[i]),
            Response::Beta { y, .. } => y[i],
        }
    }
}

impl Objective for Likelihood<'_> {
    fn dim(&self) -> usize {
        self.spec.n_params(self.p)
    }

    fn eval(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.p;
        let hetero = self.spec.is_heteroscedastic();
        let (theta0, theta) = (v[0], &v[1..=p]);
        let eta0 = v[p + 1];
        let eta = if hetero { &v[p + 2..] } else { &[][..] };
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.n();
        let mut total = 0.0;

        // Contributions to d loglik / d(linear predictor) and
        // d loglik / d(log dispersion) for each observation.
        let mut accumulate = |xi: &[f64], d_lin: f64, d_disp: f64| {
            grad[0] -= d_lin;
            for j in 0..p {
                grad[1 + j] -= d_lin * xi[j];
            }
            grad[p + 1] -= d_disp;
            if hetero {
                for j in 0..p {
                    grad[p + 2 + j] -= d_disp * xi[j];
                }
            }
        };

        match &self.resp {
            Response::Logit(z) => {
                for (i, &zi) in z.iter().enumerate() {
                    let xi = &self.x[i * p..(i + 1) * p];
                    let lin = theta0 + dot(theta, xi);
                    let disp = if hetero { eta0 + dot(eta, xi) } else { eta0 };
                    let inv_var = (-2.0 * disp).exp();
                    let r = zi - lin;
                    let r2 = r * r * inv_var;
                    total += -LN_SQRT_2PI - disp - 0.5 * r2;
                    accumulate(xi, r * inv_var, r2 - 1.0);
                }
            }
            Response::Beta { ln_y, ln_1my, .. } => {
                let shared = (!hetero).then(|| {
                    let phi = eta0.exp();
                    (phi, ln_gamma(phi), digamma(phi))
                });
                for i in 0..n {
                    let xi = &self.x[i * p..(i + 1) * p];
                    let lin = theta0 + dot(theta, xi);
                    let (phi, lg_phi, dg_phi) = match shared {
                        Some(s) => s,
                        None => {
                            let phi = (eta0 + dot(eta, xi)).exp();
                            (phi, ln_gamma(phi), digamma(phi))
                        }
                    };
                    let mu = expit(lin);
                    let one_m_mu = expit(-lin);
                    let a = mu * phi;
                    let b = one_m_mu * phi;
                    if !(a > 0.0 && b > 0.0 && phi.is_finite()) {
                        return f64::INFINITY;
                    }
                    let (ly, l1y) = (ln_y[i], ln_1my[i]);
                    total += lg_phi - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y;
                    let (dg_a, dg_b) = (digamma(a), digamma(b));
                    let resid = (ly - l1y) - (dg_a - dg_b);
                    let d_lin = phi * resid * mu * one_m_mu;
                    let d_phi = mu * resid + l1y - dg_b + dg_phi;
                    accumulate(xi, d_lin, d_phi * phi);
                }
            }
        }
        let scale = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        let value = -total * scale;
        if value.is_finite() {
            value
        } else {
            f64::INFINITY
        }
    }
}

/// Log-likelihood of `data` under `spec` at packed parameters `params`
/// (layout as in [`FittedModel::params`]). The transformation families use
/// the likelihood of `logit(y)`. Returns `-inf` outside the admissible
/// parameter region.
pub fn loglik(data: &Dataset, spec: ModelSpec, params: &[f64]) -> Result<f64> {
    let expected = spec.n_params(data.p());
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    let lik = Likelihood::new(data, spec);
    let mut g = vec![0.0; expected];
    let v = lik.eval(params, &mut g);
    Ok(-v * data.n() as f64)
}

/// Gradient of [`loglik`] with respect to the packed parameters.
pub fn loglik_gradient(data: &Dataset, spec: ModelSpec, params: &[f64]) -> Result<Vec<f64>> {
    let expected = spec.n_params(data.p());
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    let lik = Likelihood::new(data, spec);
    let mut g = vec![0.0; expected];
    lik.eval(params, &mut g);
    let n = data.n() as f64;
    Ok(g.into_iter().map(|v| -v * n).collect())
}

/// Least squares of `z` on `[1, X]`; returns coefficients and residual sum of squares.
pub(crate) fn ols(z: &[f64], x: &[f64], p: usize) -> Result<(Vec<f64>, f64)> {
    let n = z.len();
    let mut design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i * p + j - 1] });
    // Rank is judged on the column-normalized design.
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::SingularDesign { p });
    }
    for (j, s) in norms.iter().enumerate() {
        design.column_mut(j).unscale_mut(*s);
    }
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin.is_nan() || smin <= 1e-10 * smax {
        return Err(Error::SingularDesign { p });
    }
    let rhs = DVector::from_column_slice(z);
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularDesign { p })?;
    let coef: Vec<f64> = sol.iter().zip(&norms).map(|(c, s)| c / s).collect();
    let rss = (0..n)
        .map(|i| {
            let r = z[i] - coef[0] - dot(&coef[1..], &x[i * p..(i + 1) * p]);
            r * r
        })
        .sum();
    Ok((coef, rss))
}

/// Fit `spec` to `data` by maximum likelihood.
///
/// The returned model has `converged == false` when the optimizer hit its
/// iteration cap; callers that need a stationary point should use
/// [`FittedModel::ensure_converged`].
pub fn fit(data: &Dataset, spec: ModelSpec, opts: &FitOptions) -> Result<FittedModel> {
    fit_likelihood(&Likelihood::new(data, spec), opts)
}

pub(crate) fn fit_likelihood(lik: &Likelihood<'_>, opts: &FitOptions) -> Result<FittedModel> {
    let (spec, n, p) = (lik.spec, lik.n(), lik.p);
    if n < p + 2 {
        return Err(Error::InvalidData(format!(
            "need at least {} observations to fit {} covariates, got {n}",
            p + 2,
            p
        )));
    }
    let k = spec.n_params(p);
    let warm = opts
        .warm_start
        .as_ref()
        .filter(|w| w.params.len() == k && w.params.iter().all(|v| v.is_finite()));

    if spec == ModelSpec::TransformHomo {
        let z = lik.logit_response();
        let (coef, rss) = ols(&z, lik.x, p)?;
        let sigma = (rss / n as f64).sqrt();
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidData(
                "responses fit exactly; sigma is zero".into(),
            ));
        }
        let mut params = coef;
        params.push(sigma.ln());
        return Ok(finish(lik, &params, true, 0));
    }

    let x0 = match warm {
        Some(w) => w.params.clone(),
        None => initial_params(lik, opts)?,
    };
    let h0 = warm.and_then(|w| w.inv_hessian.as_deref());
    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        gtol: opts.gtol,
    };
    let m = optim::minimize(lik, &x0, h0, bfgs);
    if !m.value.is_finite() {
        return Err(Error::NonConvergence {
            grad_norm: m.grad_norm,
        });
    }
    Ok(finish(lik, &m.x, m.converged, m.iterations))
}

fn finish(lik: &Likelihood<'_>, params: &[f64], converged: bool, iterations: usize) -> FittedModel {
    let mut g = vec![0.0; params.len()];
    let value = lik.eval(params, &mut g);
    let mut m = FittedModel::from_packed(lik.spec, lik.p, params);
    m.loglik = -value * lik.n() as f64;
    m.converged = converged;
    m.iterations = iterations;
    m
}

fn initial_params(lik: &Likelihood<'_>, opts: &FitOptions) -> Result<Vec<f64>> {
    let (spec, n, p) = (lik.spec, lik.n(), lik.p);
    let z = lik.logit_response();
    let (coef, rss) = ols(&z, lik.x, p)?;
    let mut v = coef.clone();
    match spec {
        ModelSpec::TransformHomo | ModelSpec::TransformHetero => {
            v.push((rss / n as f64).sqrt().max(1e-8).ln());
        }
        ModelSpec::BetaMean | ModelSpec::BetaMeanDisp => {
            // Method of moments: Var(Y) = mu (1 - mu) / (1 + phi).
            let mut mean_var = 0.0;
            let mut ss = 0.0;
            for i in 0..n {
                let lin = coef[0] + dot(&coef[1..], &lik.x[i * p..(i + 1) * p]);
                let mu = expit(lin);
                mean_var += mu * (1.0 - mu);
                ss += (lik.unit_response(i) - mu).powi(2);
            }
            let s2 = ss / (n - p - 1).max(1) as f64;
            let phi0 = (mean_var / n as f64 / s2 - 1.0).clamp(0.5, 1e6);
            v.push(phi0.ln());
        }
    }
    if spec == ModelSpec::BetaMeanDisp {
        // Start from the constant-precision fit.
        let Response::Beta { y, .. } = &lik.resp else {
            unreachable!("precision model on the logit scale")
        };
        let m3 = Likelihood::on_unit_scale(ModelSpec::BetaMean, lik.x, p, y);
        let fitted = fit_likelihood(
            &m3,
            &FitOptions {
                warm_start: Some(WarmStart {
                    params: v,
                    inv_hessian: None,
                }),
                ..opts.clone()
            },
        )?;
        v = fitted.params();
    }
    if spec.is_heteroscedastic() {
        v.extend(std::iter::repeat_n(0.0, p));
    }
    Ok(v)
}

/// Warm start for refitting `model` on datasets close to `data`: its
/// parameters plus the inverse of a finite-difference Hessian.
pub fn warm_start(data: &Dataset, model: &FittedModel) -> WarmStart {
    warm_start_for(&Likelihood::new(data, model.spec), model)
}

pub(crate) fn warm_start_for(lik: &Likelihood<'_>, model: &FittedModel) -> WarmStart {
    let params = model.params();
    let inv_hessian = if model.spec == ModelSpec::TransformHomo {
        None
    } else {
        let k = params.len();
        let h = optim::numeric_hessian(lik, &params, 1e-5);
        DMatrix::from_row_slice(k, k, &h).cholesky().map(|c| {
            let inv = c.inverse();
            (0..k)
                .flat_map(|i| (0..k).map(move |j| (i, j)))
                .map(|(i, j)| inv[(i, j)])
                .collect()
        })
    };
    WarmStart {
        params,
        inv_hessian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 / 4.0, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<f64> = (0..12)
            .map(|i| 0.2 + 0.05 * ((i * 3) % 11) as f64)
            .collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn parse_labels() {
        for s in ModelSpec::ALL {
            assert_eq!(s.label().parse::<ModelSpec>().unwrap(), s);
        }
        assert!("m5".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn homoscedastic_eta_is_zero() {
        let d = tiny();
        for spec in [ModelSpec::TransformHomo, ModelSpec::BetaMean] {
            let m = fit(&d, spec, &FitOptions::default()).unwrap();
            assert!(m.eta.iter().all(|&e| e == 0.0));
            assert_eq!(m.eta.len(), 2);
        }
    }

    #[test]
    fn constant_column_is_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| 0.1 + 0.07 * i as f64).collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        for spec in ModelSpec::ALL {
            assert!(matches!(
                fit(&d, spec, &FitOptions::default()),
                Err(Error::SingularDesign { .. })
            ));
        }
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::from_rows(
            vec![0.2, 0.4, 0.6],
            &[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]],
        )
        .unwrap();
        assert!(matches!(
            fit(&d, ModelSpec::BetaMean, &FitOptions::default()),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn family_mismatch() {
        let m =
            FittedModel::from_params(ModelSpec::BetaMean, 0.0, vec![0.0], 1.0, vec![0.0]).unwrap();
        assert!(matches!(
            m.predict_linear(&[0.0]),
            Err(Error::FamilyMismatch { .. })
        ));
        let t = FittedModel::from_params(ModelSpec::TransformHomo, 0.0, vec![0.0], 0.0, vec![0.0])
            .unwrap();
        assert!(matches!(
            t.predict_phi(&[0.0]),
            Err(Error::FamilyMismatch { .. })
        ));
        assert!(matches!(
            t.predict_mean(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(
            FittedModel::from_params(ModelSpec::BetaMean, 0.0, vec![0.0], 1.0, vec![0.3]).is_err()
        );
    }

    #[test]
    fn stored_loglik_matches() {
        let d = tiny();
        for spec in ModelSpec::ALL {
            let m = fit(&d, spec, &FitOptions::default()).unwrap();
            let ll = loglik(&d, spec, &m.params()).unwrap();
            assert!((ll - m.loglik).abs() < 1e-8, "{spec}");
        }
    }
}
