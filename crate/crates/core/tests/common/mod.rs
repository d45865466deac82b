//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use betacp::conformal::indicator;
use betacp::data::Dataset;
use betacp::models::{FittedModel, ModelSpec};
use betacp::numeric::{beta_quantile, BetaParams};
use betacp::scores::{score, ScoreKind};

/// Tanh-sinh quadrature of `f` over `[0, h]`, accurate for integrands with
/// an integrable singularity at 0. `f` receives the abscissa computed as a
/// distance from 0, so nodes close to the endpoint keep full precision.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let step = 1.0 / 64.0;
    let mut sum = 0.0;
    let mut k = -400_i32;
    while k <= 400 {
        let t = f64::from(k) * step;
        let u = 0.5 * PI * t.sinh();
        // x = h * (1 + tanh u) / 2, written to avoid cancellation near 0.
        let x = h / (1.0 + (-2.0 * u).exp());
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        if x > 0.0 && x < h && w.is_finite() {
            let v = f(x);
            if v.is_finite() {
                sum += 0.5 * h * w * v;
            }
        }
        k += 1;
    }
    sum * step
}

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Root of a monotone function on `[lo, hi]` by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let flo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least squares by Gaussian elimination on the normal equations.
pub fn normal_equations(y: &[f64], x: &[f64], p: usize) -> Vec<f64> {
    let k = p + 1;
    let mut a = vec![0.0; k * (k + 1)];
    for (i, &yi) in y.iter().enumerate() {
        let row: Vec<f64> = std::iter::once(1.0)
            .chain(x[i * p..(i + 1) * p].iter().copied())
            .collect();
        for r in 0..k {
            for c in 0..k {
                a[r * (k + 1) + c] += row[r] * row[c];
            }
            a[r * (k + 1) + k] += row[r] * yi;
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| {
                a[i * (k + 1) + col]
                    .abs()
                    .total_cmp(&a[j * (k + 1) + col].abs())
            })
            .unwrap();
        for c in 0..=k {
            a.swap(col * (k + 1) + c, piv * (k + 1) + c);
        }
        for r in 0..k {
            if r != col {
                let f = a[r * (k + 1) + col] / a[col * (k + 1) + col];
                for c in col..=k {
                    a[r * (k + 1) + c] -= f * a[col * (k + 1) + c];
                }
            }
        }
    }
    (0..k)
        .map(|r| a[r * (k + 1) + k] / a[r * (k + 1) + r])
        .collect()
}

/// Half-normal CDF, `2 * Phi(v) - 1`, via the complementary error function.
pub fn half_normal_cdf(v: f64) -> f64 {
    1.0 - erfc_approx(v / std::f64::consts::SQRT_2)
}

/// Chebyshev-fitted erfc (Numerical Recipes `erfcc`,
/// fractional error below 1.2e-7), adequate for a KS reference.
fn erfc_approx(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87
                                        + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Smallest and largest included candidates on the grid `step, 2*step, ...`
/// by evaluating the conformal indicator at every point.
pub fn exhaustive_full_cp(
    data: &Dataset,
    x_new: &[f64],
    spec: ModelSpec,
    kind: ScoreKind,
    alpha: f64,
    step: f64,
) -> Option<(f64, f64)> {
    let m = (1.0 / step).round() as usize;
    let included: Vec<f64> = (1..m)
        .map(|i| i as f64 * step)
        .filter(|&w| indicator(w, data, x_new, spec, kind, alpha).expect("indicator"))
        .collect();
    Some((*included.first()?, *included.last()?))
}

/// Bounds of `{y : score(y) <= q}` at `x` found by bisecting the score on
/// either side of `center`, the response where the score vanishes. A side
/// whose extreme response still satisfies the inequality is reported as 0 or 1.
pub fn bisect_split_interval(
    m: &FittedModel,
    kind: ScoreKind,
    x: &[f64],
    q: f64,
    center: f64,
) -> (f64, f64) {
    let s = |y: f64| score(kind, y, m, x).expect("score") - q;
    let (eps_lo, eps_hi) = (f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    let lower = if s(eps_lo) <= 0.0 {
        0.0
    } else {
        bisect(s, eps_lo, center, 200)
    };
    let upper = if s(eps_hi) <= 0.0 {
        1.0
    } else {
        bisect(s, center, eps_hi, 200)
    };
    (lower, upper)
}

/// Where the score of `kind` under `m` at `x` is zero.
pub fn score_center(m: &FittedModel, kind: ScoreKind, x: &[f64]) -> f64 {
    let mu = m.predict_mean(x).expect("mean");
    if m.spec.is_transform() || kind == ScoreKind::Pearson {
        mu
    } else {
        let phi = m.predict_phi(x).expect("phi");
        beta_quantile(0.5, BetaParams::new(mu, phi).expect("params")).expect("median")
    }
}
