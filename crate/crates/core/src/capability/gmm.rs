//! One-dimensional Gaussian mixtures fitted by EM.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::seed;
use crate::stats::ks_one_sample;
use crate::{Error, Result};

pub const EM_TOL: f64 = 1e-8;
pub const EM_MAX_ITER: usize = 500;
pub const COLLAPSE_SD: f64 = 1e-6;
pub const RESTARTS: usize = 5;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Fitted mixture with components sorted by ascending mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub iterations: usize,
    /// Range of the data the mixture was fitted to.
    pub data_min: f64,
    pub data_max: f64,
    /// Mean log-likelihood after each EM step of the winning restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl GmmFit {
    /// Build a fit from known parameters (no data attached).
    pub fn from_parts(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>, data_min: f64, data_max: f64) -> Result<Self> {
        let n = weights.len();
        if n == 0 || means.len() != n || sds.len() != n {
            return Err(Error::Validation("mixture parameter vectors must be non-empty and aligned".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || sds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Validation("mixture weights and sds must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
        Ok(Self {
            weights: order.iter().map(|&i| weights[i] / total).collect(),
            means: order.iter().map(|&i| means[i]).collect(),
            sds: order.iter().map(|&i| sds[i]).collect(),
            log_likelihood: f64::NAN,
            aic: f64::NAN,
            bic: f64::NAN,
            n_obs: 0,
            iterations: 0,
            data_min,
            data_max,
            trace: vec![],
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn mixture_mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (0..self.n_components())
            .map(|i| self.weights[i] * (log_normal(x, self.means[i], self.sds[i])).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (0..self.n_components())
            .map(|i| self.weights[i] * Normal::new(self.means[i], self.sds[i]).map_or(0.0, |d| d.cdf(x)))
            .sum()
    }
}

fn log_normal(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct Run {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    log_likelihood: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn kmeans_pp(x: &[f64], n: usize, rng: &mut seed::Rng) -> Vec<f64> {
    let mut centers = vec![x[rng.random_range(0..x.len())]];
    let mut d2: Vec<f64> = x.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < n {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = x.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            x[pick]
        } else {
            x[rng.random_range(0..x.len())]
        };
        centers.push(next);
        for (d, v) in d2.iter_mut().zip(x) {
            *d = d.min((v - next).powi(2));
        }
    }
    centers
}

fn init_from_centers(x: &[f64], centers: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = centers.len();
    let mut count = vec![0.0; n];
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for &v in x {
        let c = (0..n).min_by(|&a, &b| (v - centers[a]).abs().total_cmp(&(v - centers[b]).abs())).unwrap();
        count[c] += 1.0;
        sum[c] += v;
        sq[c] += v * v;
    }
    let global_sd = crate::stats::std_pop(x);
    let mut w = vec![0.0; n];
    let mut mu = vec![0.0; n];
    let mut sd = vec![0.0; n];
    for c in 0..n {
        if count[c] >= 2.0 {
            mu[c] = sum[c] / count[c];
            let var = (sq[c] / count[c] - mu[c] * mu[c]).max(0.0);
            sd[c] = if var.sqrt() > COLLAPSE_SD { var.sqrt() } else { global_sd };
        } else {
            mu[c] = centers[c];
            sd[c] = global_sd;
        }
        w[c] = (count[c] + 1.0) / (x.len() as f64 + n as f64);
    }
    (w, mu, sd)
}

fn em(x: &[f64], n: usize, run_seed: u64) -> Result<Run> {
    let mut rng = seed::rng(run_seed);
    let (mut w, mut mu, mut sd) = init_from_centers(x, &kmeans_pp(x, n, &mut rng));
    if sd.iter().any(|&s| !(s > COLLAPSE_SD)) {
        return Err(Error::Numerical("mixture component collapsed at initialization".into()));
    }
    let len = x.len() as f64;
    let mut resp = vec![0.0; x.len() * n];
    let mut prev = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut buf = vec![0.0; n];
    for it in 1..=EM_MAX_ITER {
        // E step
        let mut ll = 0.0;
        let offset: Vec<f64> = (0..n).map(|c| w[c].ln() - sd[c].ln() - LN_SQRT_2PI).collect();
        let inv_sd: Vec<f64> = sd.iter().map(|s| 1.0 / s).collect();
        for (i, &v) in x.iter().enumerate() {
            let mut top = f64::NEG_INFINITY;
            for c in 0..n {
                let z = (v - mu[c]) * inv_sd[c];
                buf[c] = offset[c] - 0.5 * z * z;
                top = top.max(buf[c]);
            }
            let row = &mut resp[i * n..(i + 1) * n];
            let mut total = 0.0;
            for c in 0..n {
                row[c] = (buf[c] - top).exp();
                total += row[c];
            }
            ll += top + total.ln();
            row.iter_mut().for_each(|r| *r /= total);
        }
        let mean_ll = ll / len;
        if it > 1 {
            trace.push(mean_ll);
        }
        if mean_ll - prev < EM_TOL && it > 1 {
            return Ok(Run { weights: w, means: mu, sds: sd, log_likelihood: ll, iterations: it - 1, trace });
        }
        prev = mean_ll;
        // M step
        for c in 0..n {
            let (mut nk, mut s1) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                nk += resp[i * n + c];
                s1 += resp[i * n + c] * v;
            }
            if nk <= 0.0 {
                return Err(Error::Numerical("mixture component lost all responsibility".into()));
            }
            let m = s1 / nk;
            let s2: f64 = x.iter().enumerate().map(|(i, &v)| resp[i * n + c] * (v - m).powi(2)).sum();
            w[c] = nk / len;
            mu[c] = m;
            sd[c] = (s2 / nk).sqrt();
            if !(sd[c] > COLLAPSE_SD) {
                return Err(Error::Numerical(format!("mixture component {c} collapsed (sd {:.3e})", sd[c])));
            }
        }
    }
    // final likelihood at the last parameters
    let ll: f64 = x
        .iter()
        .map(|&v| {
            for c in 0..n {
                buf[c] = w[c].ln() + log_normal(v, mu[c], sd[c]);
            }
            log_sum_exp(&buf)
        })
        .sum();
    trace.push(ll / len);
    Ok(Run { weights: w, means: mu, sds: sd, log_likelihood: ll, iterations: EM_MAX_ITER, trace })
}

/// Fit an `n`-component mixture by EM from several k-means++ starts and keep
/// the most likely non-degenerate run.
pub fn fit_gmm(values: &[f64], n: usize, seed_value: u64) -> Result<GmmFit> {
    if n < 1 {
        return Err(Error::Validation("mixture needs at least one component".into()));
    }
    if values.len() < 2 * n {
        return Err(Error::Validation(format!("{} values are too few for {n} components", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("mixture data must be finite".into()));
    }
    let runs: Vec<Result<Run>> =
        (0..RESTARTS as u64).into_par_iter().map(|r| em(values, n, seed::derive(seed_value, &[n as u64, r]))).collect();
    let mut best: Option<Run> = None;
    let mut last_err = None;
    for r in runs {
        match r {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.log_likelihood > b.log_likelihood) {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let run = best.ok_or_else(|| last_err.unwrap())?;
    let k = (3 * n - 1) as f64;
    let nobs = values.len();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut fit = GmmFit::from_parts(run.weights, run.means, run.sds, lo, hi)?;
    fit.log_likelihood = run.log_likelihood;
    fit.aic = 2.0 * k - 2.0 * run.log_likelihood;
    fit.bic = k * (nobs as f64).ln() - 2.0 * run.log_likelihood;
    fit.n_obs = nobs;
    fit.iterations = run.iterations;
    fit.trace = run.trace;
    Ok(fit)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AicSelection {
    pub best_n: usize,
    /// `(n, aic)` for every component count that could be fitted.
    pub table: Vec<(usize, f64)>,
    pub fits: Vec<GmmFit>,
}

impl AicSelection {
    pub fn best(&self) -> &GmmFit {
        self.fits.iter().find(|f| f.n_components() == self.best_n).unwrap()
    }
}

/// Fit 1..=n_max components and pick the AIC minimizer.
pub fn select_n_by_aic(values: &[f64], n_max: usize, seed_value: u64) -> Result<AicSelection> {
    if n_max < 1 {
        return Err(Error::Validation("n_max must be at least 1".into()));
    }
    let mut fits = Vec::new();
    let mut first_err = None;
    for n in 1..=n_max {
        match fit_gmm(values, n, seed_value) {
            Ok(f) => fits.push(f),
            Err(e) => {
                log::warn!("{n}-component mixture failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(first_err.unwrap());
    }
    let table: Vec<(usize, f64)> = fits.iter().map(|f| (f.n_components(), f.aic)).collect();
    let best_n = table.iter().copied().fold((0, f64::INFINITY), |b, t| if t.1 < b.1 { t } else { b }).0;
    Ok(AicSelection { best_n, table, fits })
}

/// One-sample KS test of `values` against the mixture CDF: `(D, p)`.
pub fn gmm_ks_test(fit: &GmmFit, values: &[f64]) -> Result<(f64, f64)> {
    ks_one_sample(values, |x| fit.cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal as NormalDist};

    fn normal_draws(seed_value: u64, n: usize, mu: f64, sd: f64) -> Vec<f64> {
        let mut rng = seed::rng(seed_value);
        let d = NormalDist::new(mu, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn single_gaussian() {
        let x = normal_draws(1, 10_000, 0.0, 1.0);
        let fit = fit_gmm(&x, 1, 3).unwrap();
        assert!(fit.means[0].abs() < 0.05);
        assert!((fit.sds[0] - 1.0).abs() < 0.05);
        assert!((fit.aic - (4.0 - 2.0 * fit.log_likelihood)).abs() < 1e-9);
    }

    #[test]
    fn two_separated_gaussians() {
        let mut x = normal_draws(2, 5000, -5.0, 1.0);
        x.extend(normal_draws(3, 5000, 5.0, 1.0));
        let fit = fit_gmm(&x, 2, 9).unwrap();
        assert!((fit.means[0] + 5.0).abs() < 0.2);
        assert!((fit.means[1] - 5.0).abs() < 0.2);
        assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_data_collapses() {
        assert!(matches!(fit_gmm(&[2.0; 50], 1, 0), Err(Error::Numerical(_))));
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(fit_gmm(&[1.0, 2.0, 3.0], 2, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn em_is_monotone() {
        let mut x = normal_draws(4, 2000, -1.0, 1.0);
        x.extend(normal_draws(5, 1000, 2.0, 0.5));
        for n in 1..=3 {
            let fit = fit_gmm(&x, n, 1).unwrap();
            for pair in fit.trace.windows(2) {
                assert!(pair[1] - pair[0] >= -1e-10);
            }
        }
    }

    #[test]
    fn aic_picks_component_count() {
        let uni = normal_draws(6, 10_000, 0.0, 1.0);
        assert_eq!(select_n_by_aic(&uni, 3, 1).unwrap().best_n, 1);
        let mut bi = normal_draws(7, 5000, -5.0, 1.0);
        bi.extend(normal_draws(8, 5000, 5.0, 1.0));
        let sel = select_n_by_aic(&bi, 3, 1).unwrap();
        assert_eq!(sel.best_n, 2);
        assert_eq!(sel.table.len(), 3);
    }

    #[test]
    fn ks_against_own_fit_and_mismatch() {
        let x = normal_draws(9, 2000, 0.0, 1.0);
        let fit = fit_gmm(&x, 1, 0).unwrap();
        assert!(gmm_ks_test(&fit, &x).unwrap().1 > 0.05);
        let sharp = GmmFit::from_parts(vec![1.0], vec![0.5], vec![0.01], 0.0, 1.0).unwrap();
        let uniform: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        assert!(gmm_ks_test(&sharp, &uniform).unwrap().1 < 0.01);
    }

    #[test]
    fn fit_is_deterministic() {
        let x = normal_draws(10, 500, 0.0, 1.0);
        assert_eq!(fit_gmm(&x, 2, 5).unwrap(), fit_gmm(&x, 2, 5).unwrap());
    }
}
