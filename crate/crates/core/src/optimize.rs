//! Deterministic first-order optimization and linear-algebra helpers.
//!
//! Everything here is dependency-free and fixed-order: the same inputs
//! produce bitwise-identical iterates on every run, which the experiment
//! harness relies on for reproducible reports.

use crate::error::{Error, Result};

/// Adam settings with optional per-coordinate box constraints.
#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iters: usize,
    /// Componentwise lower bounds; iterates are projected after every step.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            iters: 500,
            lower: None,
            upper: None,
        }
    }
}

impl AdamConfig {
    pub fn with_iters(mut self, iters: usize) -> Self {
        self.iters = iters;
        self
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if self.iters == 0 {
            return Err(Error::Config("iters must be at least 1".into()));
        }
        for (name, b) in [("lower", &self.lower), ("upper", &self.upper)] {
            if let Some(v) = b {
                if v.len() != dim {
                    return Err(Error::Config(format!(
                        "{name} bound has {} entries for {dim} parameters",
                        v.len()
                    )));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (&self.lower, &self.upper) {
            if lo.iter().zip(hi).any(|(l, h)| l > h) {
                return Err(Error::Config("lower bound exceeds upper bound".into()));
            }
        }
        Ok(())
    }

    fn project(&self, theta: &mut [f64]) {
        if let Some(lo) = &self.lower {
            for (t, l) in theta.iter_mut().zip(lo) {
                *t = t.max(*l);
            }
        }
        if let Some(hi) = &self.upper {
            for (t, h) in theta.iter_mut().zip(hi) {
                *t = t.min(*h);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamResult {
    pub theta: Vec<f64>,
    pub value: f64,
    /// Objective value at every iterate, `iters + 1` entries including the
    /// start and the final point.
    pub trace: Vec<f64>,
}

/// Minimize `f` from `theta0` with Adam. The objective returns a value and
/// its gradient; any error or non-finite quantity aborts with the last
/// finite iterate attached.
pub fn adam_minimize<F>(mut f: F, theta0: &[f64], cfg: &AdamConfig) -> Result<AdamResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate(theta0.len())?;
    let mut theta = theta0.to_vec();
    cfg.project(&mut theta);
    let dim = theta.len();
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut trace = Vec::with_capacity(cfg.iters + 1);
    let mut last_good: Option<(Vec<f64>, f64)> = None;
    let abort = |iter: usize, what: String, last: &Option<(Vec<f64>, f64)>| {
        let (lt, lv) = last.clone().unwrap_or((Vec::new(), f64::NAN));
        Error::OptimizerAborted { iter, what, last_theta: lt, last_value: lv }
    };
    for iter in 0..=cfg.iters {
        let (value, grad) = match f(&theta) {
            Ok(vg) => vg,
            Err(e) => return Err(abort(iter, format!("objective failed: {e}"), &last_good)),
        };
        if !value.is_finite() {
            return Err(abort(iter, format!("objective value {value}"), &last_good));
        }
        if grad.len() != dim {
            return Err(Error::Config(format!(
                "gradient has {} entries for {dim} parameters",
                grad.len()
            )));
        }
        if let Some(bad) = grad.iter().find(|g| !g.is_finite()) {
            return Err(abort(iter, format!("gradient component {bad}"), &last_good));
        }
        trace.push(value);
        last_good = Some((theta.clone(), value));
        if iter == cfg.iters {
            break;
        }
        let t = (iter + 1) as f64;
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for i in 0..dim {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            theta[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
        cfg.project(&mut theta);
    }
    let (theta, value) = last_good.expect("at least one iterate evaluated");
    Ok(AdamResult { theta, value, trace })
}

/// True when the optimization trace trends downward: the mean of the last
/// 100 entries does not exceed the mean of the first 100 (or of the halves,
/// for short traces).
pub fn trace_trend_ok(trace: &[f64]) -> bool {
    if trace.len() < 2 {
        return true;
    }
    let k = (trace.len() / 2).min(100);
    let head: f64 = trace[..k].iter().sum::<f64>() / k as f64;
    let tail: f64 = trace[trace.len() - k..].iter().sum::<f64>() / k as f64;
    tail <= head
}

/// Minimize the quadratic `½ θᵀ A θ − bᵀ θ` for symmetric positive-definite
/// `A` (row-major `n×n`): solve `A θ = b` by Cholesky factorization. Fails
/// with the smallest eigenvalue attached when `A` is not positive definite,
/// or with a numeric error when the solution's residual exceeds
/// `1e-10 · max(1, ‖b‖_∞)`.
pub fn solve_quadratic(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Config(format!(
            "matrix has {} entries, expected {n}×{n}",
            a.len()
        )));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite {
                        min_eig: smallest_eigenvalue(a, n),
                    });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    let scale = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut resid: f64 = 0.0;
    for i in 0..n {
        let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
        resid = resid.max((ax - b[i]).abs());
    }
    if resid > 1e-10 * scale {
        return Err(Error::NonFinite {
            context: format!("linear solve residual {resid:.3e} exceeds 1e-10 × {scale:.3e}"),
        });
    }
    Ok(x)
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations —
/// diagnostic quality, used in error reports only.
fn smallest_eigenvalue(a: &[f64], n: usize) -> f64 {
    sym_eigenvalues(a, n).into_iter().fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of a symmetric matrix (cyclic Jacobi; small `n` only).
pub(crate) fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _ in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Compare an analytic gradient against central differences; returns the
/// worst relative discrepancy over coordinates, with the denominator floored
/// at 1e-12 so exact zeros compare cleanly.
pub fn grad_check<F>(mut f: F, theta: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (_, grad) = f(theta)?;
    if grad.len() != theta.len() {
        return Err(Error::Config(format!(
            "gradient has {} entries for {} parameters",
            grad.len(),
            theta.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let h = 1e-5 * (1.0 + theta[i].abs());
        let mut tp = theta.to_vec();
        tp[i] += h;
        let mut tm = theta.to_vec();
        tm[i] -= h;
        let (vp, _) = f(&tp)?;
        let (vm, _) = f(&tm)?;
        let fd = (vp - vm) / (2.0 * h);
        let denom = (grad[i].abs() + fd.abs()).max(1e-12);
        worst = worst.max((grad[i] - fd).abs() / denom);
    }
    Ok(worst)
}
