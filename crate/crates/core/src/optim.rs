//! BFGS minimization for smooth, low-dimensional objectives.

/// A differentiable objective. Returns the value and writes the gradient;
/// a non-finite value marks `x` as outside the admissible region.
pub trait Objective {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient infinity-norm.
    pub gtol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn identity(k: usize, scale: f64) -> Vec<f64> {
    let mut h = vec![0.0; k * k];
    for i in 0..k {
        h[i * k + i] = scale;
    }
    h
}

/// Minimize `f` from `x0`. `inv_hessian0`, when given, is a row-major
/// `k x k` starting approximation to the inverse Hessian.
pub fn minimize<F: Objective>(
    f: &F,
    x0: &[f64],
    inv_hessian0: Option<&[f64]>,
    opts: BfgsOptions,
) -> Minimum {
    let k = f.dim();
    assert_eq!(x0.len(), k);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; k];
    let mut fx = f.eval(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum {
            x,
            value: fx,
            grad_norm: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    }
    let mut fresh_h = inv_hessian0.is_none();
    let mut h = match inv_hessian0 {
        Some(h0) if h0.len() == k * k => h0.to_vec(),
        _ => identity(k, 1.0),
    };

    let mut d = vec![0.0; k];
    let mut x_new = vec![0.0; k];
    let mut g_new = vec![0.0; k];
    let mut s = vec![0.0; k];
    let mut yv = vec![0.0; k];
    let mut hy = vec![0.0; k];
    let mut resets = 0;
    let mut iter = 0;

    while iter < opts.max_iter {
        if inf_norm(&g) <= opts.gtol {
            break;
        }
        iter += 1;
        for i in 0..k {
            d[i] = -dot(&h[i * k..(i + 1) * k], &g);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            h = identity(k, 1.0);
            fresh_h = true;
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -dot(&g, &g);
        }

        // Backtracking line search with the Armijo condition.
        let mut t = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            for i in 0..k {
                x_new[i] = x[i] + t * d[i];
            }
            f_new = f.eval(&x_new, &mut g_new);
            if f_new.is_finite()
                && g_new.iter().all(|v| v.is_finite())
                && f_new <= fx + 1e-4 * t * slope
            {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // A failed search from a fresh metric means we are at the
            // resolution limit of the objective.
            if fresh_h || resets >= 2 {
                break;
            }
            resets += 1;
            h = identity(k, 1.0);
            fresh_h = true;
            continue;
        }

        for i in 0..k {
            s[i] = x_new[i] - x[i];
            yv[i] = g_new[i] - g[i];
        }
        let sy = dot(&s, &yv);
        let yy = dot(&yv, &yv);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() && sy > 0.0 {
            if fresh_h {
                h = identity(k, sy / yy);
                fresh_h = false;
            }
            let rho = 1.0 / sy;
            for i in 0..k {
                hy[i] = dot(&h[i * k..(i + 1) * k], &yv);
            }
            let yhy = dot(&yv, &hy);
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] +=
                        rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
    }

    let grad_norm = inf_norm(&g);
    Minimum {
        x,
        value: fx,
        grad_norm,
        iterations: iter,
        converged: grad_norm <= opts.gtol,
    }
}

/// Central-difference gradient, used to check analytic gradients.
pub fn numeric_gradient<F: Objective>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let k = x.len();
    let mut scratch = vec![0.0; k];
    let mut xp = x.to_vec();
    (0..k)
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f.eval(&xp, &mut scratch);
            xp[i] = x[i] - h;
            let fm = f.eval(&xp, &mut scratch);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Hessian by central differences of the analytic gradient, symmetrized.
/// Row-major `k x k`.
pub fn numeric_hessian<F: Objective>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let k = x.len();
    let mut hess = vec![0.0; k * k];
    let mut gp = vec![0.0; k];
    let mut gm = vec![0.0; k];
    let mut xp = x.to_vec();
    for j in 0..k {
        let h = rel_step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        f.eval(&xp, &mut gp);
        xp[j] = x[j] - h;
        f.eval(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..k {
            hess[i * k + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    for i in 0..k {
        for j in 0..i {
            let m = 0.5 * (hess[i * k + j] + hess[j * k + i]);
            hess[i * k + j] = m;
            hess[j * k + i] = m;
        }
    }
    hess
}
