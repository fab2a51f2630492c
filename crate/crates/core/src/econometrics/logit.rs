use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::{stars, DesignMatrix, TidyRow};
use crate::{Error, Result};

pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedLogitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Cut points, strictly increasing.
    pub thresholds: Vec<f64>,
    /// Sandwich errors for coefficients then thresholds.
    pub robust_se: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Ordered category values (ascending).
    pub levels: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    /// McFadden: `1 − lnL / lnL₀`.
    pub pseudo_r_squared: f64,
    pub lr_chi2: f64,
    pub lr_p_value: f64,
    pub aic: f64,
    pub n: usize,
    pub iterations: usize,
    /// Log-likelihood after each accepted Newton step.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl OrderedLogitResult {
    pub fn tidy(&self, model: &str) -> Vec<TidyRow> {
        let k = self.names.len();
        let terms = self.names.iter().cloned().chain((1..=self.thresholds.len()).map(|j| format!("cut{j}")));
        terms
            .zip(self.coefficients.iter().chain(&self.thresholds))
            .enumerate()
            .map(|(i, (term, &estimate))| TidyRow {
                model: model.to_string(),
                term,
                estimate,
                std_error: self.robust_se[i],
                p_value: self.p_values[i],
                stars: if i < k { stars(self.p_values[i]).to_string() } else { String::new() },
            })
            .collect()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-observation log-likelihood pieces at natural parameters.
struct Eval {
    ll: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    scores: Vec<DVector<f64>>,
}

fn evaluate(x: &DMatrix<f64>, y: &[usize], beta: &[f64], theta: &[f64], need_scores: bool) -> Eval {
    let (n, k) = x.shape();
    let m = theta.len();
    let dim = k + m;
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    let mut scores = Vec::new();
    let mut ll = 0.0;
    for i in 0..n {
        let eta: f64 = (0..k).map(|c| x[(i, c)] * beta[c]).sum();
        let j = y[i];
        // upper cut j (absent for the top category), lower cut j-1
        let (fa, da, dda) = if j < m {
            let f = logistic(theta[j] - eta);
            let d = f * (1.0 - f);
            (f, d, d * (1.0 - 2.0 * f))
        } else {
            (1.0, 0.0, 0.0)
        };
        let (fb, db, ddb) = if j > 0 {
            let f = logistic(theta[j - 1] - eta);
            let d = f * (1.0 - f);
            (f, d, d * (1.0 - 2.0 * f))
        } else {
            (0.0, 0.0, 0.0)
        };
        // difference of CDFs, computed from the side with less cancellation
        let p = if j > 0 && j < m {
            let lo = theta[j - 1] - eta;
            let hi = theta[j] - eta;
            if lo > 0.0 {
                logistic(-lo) - logistic(-hi)
            } else {
                fa - fb
            }
        } else {
            fa - fb
        };
        let p = p.max(1e-300);
        ll += p.ln();

        let mut s = DVector::zeros(dim);
        let gb = -(da - db) / p;
        for c in 0..k {
            s[c] = gb * x[(i, c)];
        }
        if j < m {
            s[k + j] += da / p;
        }
        if j > 0 {
            s[k + j - 1] -= db / p;
        }
        grad += &s;

        let hbb = (dda - ddb) / p - ((da - db) / p).powi(2);
        for a in 0..k {
            for b in 0..k {
                hess[(a, b)] += hbb * x[(i, a)] * x[(i, b)];
            }
        }
        if j < m {
            let h = dda / p - (da / p).powi(2);
            hess[(k + j, k + j)] += h;
            let hbt = -(dda / p - da * (da - db) / (p * p));
            for a in 0..k {
                hess[(a, k + j)] += hbt * x[(i, a)];
                hess[(k + j, a)] += hbt * x[(i, a)];
            }
        }
        if j > 0 {
            let h = -ddb / p - (db / p).powi(2);
            hess[(k + j - 1, k + j - 1)] += h;
            let hbt = -(-ddb / p + db * (da - db) / (p * p));
            for a in 0..k {
                hess[(a, k + j - 1)] += hbt * x[(i, a)];
                hess[(k + j - 1, a)] += hbt * x[(i, a)];
            }
        }
        if j > 0 && j < m {
            let h = da * db / (p * p);
            hess[(k + j, k + j - 1)] += h;
            hess[(k + j - 1, k + j)] += h;
        }
        if need_scores {
            scores.push(s);
        }
    }
    Eval { ll, grad, hess, scores }
}

/// Solves `info · step = g`, adding a growing ridge if `info` is not
/// positive definite.
fn newton_step(info: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = info.diagonal().amax().max(1e-12);
    let mut shift = 0.0;
    loop {
        let mut m = info.clone();
        for d in 0..m.nrows() {
            m[(d, d)] += shift;
        }
        if let Some(c) = m.cholesky() {
            return c.solve(g);
        }
        if shift > 1e6 * scale {
            return g / scale;
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
    }
}

/// Cut points from the unconstrained form: first cut, then log gaps.
fn thresholds_of(gamma: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(gamma.len());
    for (j, g) in gamma.iter().enumerate() {
        t.push(if j == 0 { *g } else { t[j - 1] + g.exp() });
    }
    t
}

/// Proportional-odds model `P(y ≤ j) = Λ(θ_j − xβ)` by Newton-Raphson with
/// backtracking. No intercept: the cut points absorb it.
pub fn ordered_logit(design: &DesignMatrix) -> Result<OrderedLogitResult> {
    let mut levels: Vec<f64> = design.y.iter().copied().collect();
    if levels.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("ordinal response contains NaN".into()));
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let n_levels = levels.len();
    if n_levels < 2 {
        return Err(Error::Validation("ordinal response needs at least two observed categories".into()));
    }
    let y: Vec<usize> = design.y.iter().map(|v| levels.iter().position(|l| l == v).unwrap()).collect();
    let x = &design.x;
    let (n, k) = x.shape();
    let m = n_levels - 1;
    if n <= k + n_levels {
        return Err(Error::Validation(format!("{n} observations are too few for {} parameters", k + m)));
    }
    let bad = super::ols::collinear_columns(x, &design.names);
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad));
    }

    let counts: Vec<f64> = (0..n_levels).map(|j| y.iter().filter(|&&v| v == j).count() as f64).collect();
    let nf = n as f64;
    let null_ll: f64 = counts.iter().filter(|&&c| c > 0.0).map(|c| c * (c / nf).ln()).sum();
    let mut cum = 0.0;
    let mut start = Vec::with_capacity(m);
    for c in &counts[..m] {
        cum += c / nf;
        start.push((cum / (1.0 - cum)).ln());
    }
    // unconstrained parameters: β then (θ₁, ln gaps)
    let mut params: Vec<f64> = vec![0.0; k];
    params.push(start[0]);
    for j in 1..m {
        params.push((start[j] - start[j - 1]).max(1e-6).ln());
    }

    let split = |p: &[f64]| (p[..k].to_vec(), thresholds_of(&p[k..]));
    let loglik = |p: &[f64]| {
        let (b, t) = split(p);
        evaluate(x, &y, &b, &t, false).ll
    };

    let dim = k + m;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut current = loglik(&params);
    trace.push(current);
    while iterations < MAX_ITER {
        iterations += 1;
        let (b, t) = split(&params);
        let e = evaluate(x, &y, &b, &t, false);
        // chain rule to the unconstrained gap parameters
        let mut jac = DMatrix::<f64>::identity(dim, dim);
        for jt in 0..m {
            jac[(k + jt, k)] = 1.0;
            for jg in 1..=jt {
                jac[(k + jt, k + jg)] = params[k + jg].exp();
            }
        }
        // The curvature of the exponential gap map is left out: it vanishes
        // at the optimum and keeps the system negative definite.
        let g = jac.transpose() * &e.grad;
        let info = jac.transpose() * (-&e.hess) * &jac;
        let step = newton_step(info, &g);
        // Newton decrement: predicted gain of a full step, scale-free
        let decrement = g.dot(&step);
        if decrement.abs() < 1e-12 {
            converged = true;
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + alpha * s).collect();
            let l = loglik(&trial);
            if l.is_finite() && l >= current {
                params = trial;
                current = l;
                trace.push(l);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no representable improvement along the Newton direction
            converged = decrement.abs() < 1e-6;
            break;
        }
    }
    let (beta, theta) = split(&params);
    let blown = params.iter().any(|p| !p.is_finite() || p.abs() > 1e4);
    if !converged || current / nf > -1e-6 || blown {
        return Err(Error::Separation(format!(
            "ordered logit did not converge after {iterations} iterations (log-likelihood {current:.6e}, max |parameter| {:.3e}); the response may be perfectly separated",
            params.iter().fold(0.0f64, |a, p| a.max(p.abs()))
        )));
    }

    let e = evaluate(x, &y, &beta, &theta, true);
    let info = -e.hess;
    let bread = info.try_inverse().ok_or_else(|| Error::Numerical("information matrix is singular".into()))?;
    let mut meat = DMatrix::<f64>::zeros(dim, dim);
    for s in &e.scores {
        meat += s * s.transpose();
    }
    let cov = &bread * meat * &bread * (nf / (nf - dim as f64));
    let robust_se: Vec<f64> = (0..dim).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let z = Normal::new(0.0, 1.0).unwrap();
    let estimates: Vec<f64> = beta.iter().chain(&theta).copied().collect();
    let p_values =
        estimates.iter().zip(&robust_se).map(|(b, se)| 2.0 * (1.0 - z.cdf((b / se).abs()))).collect();
    let lr_chi2 = (2.0 * (current - null_ll)).max(0.0);
    let lr_p_value = if k > 0 { 1.0 - ChiSquared::new(k as f64).unwrap().cdf(lr_chi2) } else { 1.0 };
    Ok(OrderedLogitResult {
        names: design.names.clone(),
        coefficients: beta,
        thresholds: theta,
        robust_se,
        p_values,
        levels,
        log_likelihood: current,
        null_log_likelihood: null_ll,
        pseudo_r_squared: 1.0 - current / null_ll,
        lr_chi2,
        lr_p_value,
        aic: 2.0 * dim as f64 - 2.0 * current,
        n,
        iterations,
        trace,
    })
}
