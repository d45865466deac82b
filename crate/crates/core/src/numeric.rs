//! Special functions and distribution primitives.
//!
//! Everything here is a pure function of its arguments. The beta family uses
//! the mean/precision parametrization: `mu` in (0,1) is the mean and
//! `phi > 0` the precision, so the usual shapes are `a = mu * phi` and
//! `b = (1 - mu) * phi` and `Var(Y) = mu (1 - mu) / (1 + phi)`.

use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Mean/precision parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    mu: f64,
    phi: f64,
}

impl BetaParams {
    pub fn new(mu: f64, phi: f64) -> Result<Self> {
        let ok = mu > 0.0 && mu < 1.0 && phi > 0.0 && phi.is_finite();
        let p = Self { mu, phi };
        if ok && p.alpha() > 0.0 && p.beta() > 0.0 {
            Ok(p)
        } else {
            Err(Error::InvalidBetaParams { mu, phi })
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// First shape parameter, `mu * phi`.
    pub fn alpha(&self) -> f64 {
        self.mu * self.phi
    }

    /// Second shape parameter, `(1 - mu) * phi`.
    pub fn beta(&self) -> f64 {
        (1.0 - self.mu) * self.phi
    }

    pub fn variance(&self) -> f64 {
        self.mu * (1.0 - self.mu) / (1.0 + self.phi)
    }
}

fn check_unit(function: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { function, value })
    }
}

/// `log(y / (1 - y))`.
pub fn logit(y: f64) -> Result<f64> {
    check_unit("logit", y)?;
    Ok(logit_unchecked(y))
}

#[inline]
pub(crate) fn logit_unchecked(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

/// Inverse of [`logit`], `1 / (1 + exp(-x))`, evaluated without overflow.
#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log of the beta density at `y`.
pub fn beta_ln_pdf(y: f64, p: BetaParams) -> Result<f64> {
    check_unit("beta_pdf", y)?;
    Ok(beta_ln_pdf_unchecked(y.ln(), (-y).ln_1p(), p))
}

#[inline]
pub(crate) fn beta_ln_pdf_unchecked(ln_y: f64, ln_1my: f64, p: BetaParams) -> f64 {
    let (a, b) = (p.alpha(), p.beta());
    ln_gamma(p.phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ln_y + (b - 1.0) * ln_1my
}

pub fn beta_pdf(y: f64, p: BetaParams) -> Result<f64> {
    beta_ln_pdf(y, p).map(f64::exp)
}

/// Beta distribution function, the regularized incomplete beta `I_y(a, b)`.
pub fn beta_cdf(y: f64, p: BetaParams) -> Result<f64> {
    check_unit("beta_cdf", y)?;
    Ok(beta_cdf_unchecked(y, p))
}

#[inline]
pub(crate) fn beta_cdf_unchecked(y: f64, p: BetaParams) -> f64 {
    beta_reg(p.alpha(), p.beta(), y).clamp(0.0, 1.0)
}

/// Inverse of [`beta_cdf`] in its first argument.
///
/// Safeguarded Newton iteration inside a shrinking bracket; a Newton step
/// that leaves the bracket is replaced by bisection.
pub fn beta_quantile(u: f64, p: BetaParams) -> Result<f64> {
    check_unit("beta_quantile", u)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut y = p.mu;
    let mut best = (f64::INFINITY, y);
    for _ in 0..400 {
        let f = beta_cdf_unchecked(y, p) - u;
        if f.abs() < best.0 {
            best = (f.abs(), y);
        }
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Adjacent doubles: nothing left to resolve.
            break;
        }
        let dens = beta_ln_pdf_unchecked(y.ln(), (-y).ln_1p(), p).exp();
        let newton = y - f / dens;
        y = if !(dens.is_finite() && dens > 0.0 && newton > lo && newton < hi) {
            mid
        } else if newton == y {
            // Step below one ulp: probe the neighbour towards the root.
            let bits = y.to_bits();
            f64::from_bits(if f > 0.0 { bits - 1 } else { bits + 1 })
        } else {
            newton
        };
    }
    Ok(best.1.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
///
/// Acklam's rational approximation followed by one Halley correction.
pub fn norm_quantile(u: f64) -> Result<f64> {
    check_unit("norm_quantile", u)?;
    if u > 0.5 {
        // 1 - u is exact for u in (0.5, 1).
        return Ok(-lower_norm_quantile(1.0 - u));
    }
    Ok(lower_norm_quantile(u))
}

fn lower_norm_quantile(u: f64) -> f64 {
    if u == 0.5 {
        return 0.0;
    }
    let x = acklam(u);
    let e = norm_cdf(x) - u;
    let step = e * SQRT_2PI * (0.5 * x * x).exp();
    x - step / (1.0 + 0.5 * x * step)
}

fn acklam(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if u < P_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
