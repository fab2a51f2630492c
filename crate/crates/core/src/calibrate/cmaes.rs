//! (μ/μ_w, λ)-CMA-ES with rank-μ covariance update, cumulative step-size
//! adaptation and box constraints by clipping.
//!
//! The search runs in coordinates normalized to the unit box, so a single
//! step size applies to parameters of very different widths.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial: Vec<f64>,
    pub population: usize,
    pub generations: usize,
    /// Initial step size as a fraction of each box width.
    pub sigma_fraction: f64,
    pub seed: u64,
}

impl CmaesConfig {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, initial: Vec<f64>, seed: u64) -> Self {
        Self { lower, upper, initial, population: 20, generations: 50, sigma_fraction: 0.3, seed }
    }

    fn validate(&self) -> Result<()> {
        let n = self.initial.len();
        if n == 0 || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Validation("bounds and initial point must have the same non-zero length".into()));
        }
        for i in 0..n {
            if !(self.lower[i] < self.upper[i]) {
                return Err(Error::Validation(format!("bound {i}: lower must be below upper")));
            }
            if !(self.lower[i]..=self.upper[i]).contains(&self.initial[i]) {
                return Err(Error::Validation(format!("initial value {i} lies outside its bounds")));
            }
        }
        if self.population < 2 {
            return Err(Error::Validation("population must be at least 2".into()));
        }
        if !(self.sigma_fraction > 0.0) {
            return Err(Error::Validation("initial step size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub initial_sigma: Vec<f64>,
    pub final_mean: Vec<f64>,
}

/// Minimize `objective(x, seed)`. Each evaluation receives its own derived
/// seed so stochastic objectives are reproducible and order-independent.
/// Non-finite values rank as worst.
pub fn cma_es<F>(objective: F, config: &CmaesConfig) -> Result<CmaesResult>
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    config.validate()?;
    let n = config.initial.len();
    let nf = n as f64;
    let lam = config.population;
    let mu = lam / 2;
    let raw: Vec<f64> = (0..mu).map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / wsum).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let width: Vec<f64> = (0..n).map(|i| config.upper[i] - config.lower[i]).collect();
    let to_x = |z: &DVector<f64>| -> Vec<f64> { (0..n).map(|i| config.lower[i] + z[i] * width[i]).collect() };
    let fitness = |x: &[f64], s: u64| {
        let f = objective(x, s);
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    };

    let mut mean = DVector::from_iterator(n, (0..n).map(|i| (config.initial[i] - config.lower[i]) / width[i]));
    let mut sigma = config.sigma_fraction;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scale = DVector::from_element(n, 1.0);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let mut best = config.initial.clone();
    let mut best_fitness = fitness(&best, seed::derive(config.seed, &[0, u64::MAX]));
    let mut evaluations = 1;
    let mut trace = Vec::with_capacity(config.generations);

    for gen in 1..=config.generations {
        let mut rng = seed::rng(seed::derive(config.seed, &[gen as u64]));
        let mut candidates: Vec<DVector<f64>> = Vec::with_capacity(lam);
        for _ in 0..lam {
            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let y = &basis * z.component_mul(&scale);
            let x = (&mean + y * sigma).map(|v: f64| v.clamp(0.0, 1.0));
            candidates.push(x);
        }
        let scored: Vec<f64> = candidates
            .par_iter()
            .enumerate()
            .map(|(k, z)| fitness(&to_x(z), seed::derive(config.seed, &[gen as u64, k as u64])))
            .collect();
        evaluations += lam;
        let mut order: Vec<usize> = (0..lam).collect();
        order.sort_by(|&a, &b| scored[a].total_cmp(&scored[b]).then(a.cmp(&b)));
        if scored[order[0]] < best_fitness {
            best_fitness = scored[order[0]];
            best = to_x(&candidates[order[0]]);
        }
        trace.push(best_fitness);

        let old = mean.clone();
        mean = DVector::zeros(n);
        for (i, &k) in order.iter().take(mu).enumerate() {
            mean += &candidates[k] * w[i];
        }
        let step = (&mean - &old) / sigma;
        let inv_sqrt = &basis * DMatrix::from_diagonal(&scale.map(|d| 1.0 / d)) * basis.transpose();
        p_sigma = &p_sigma * (1.0 - c_sigma) + &inv_sqrt * &step * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let ps_norm = p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * gen as i32)).sqrt() < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        p_c = &p_c * (1.0 - c_c) + &step * (h * (c_c * (2.0 - c_c) * mu_eff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (i, &k) in order.iter().take(mu).enumerate() {
            let y = (&candidates[k] - &old) / sigma;
            rank_mu += &y * y.transpose() * w[i];
        }
        cov = &cov * (1.0 - c_1 - c_mu)
            + (&p_c * p_c.transpose() + &cov * ((1.0 - h) * c_c * (2.0 - c_c))) * c_1
            + rank_mu * c_mu;
        cov = (&cov + cov.transpose()) * 0.5;
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(cov.clone());
        basis = eig.eigenvectors;
        scale = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
        if !sigma.is_finite() || scale.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("CMA-ES state became non-finite".into()));
        }
    }

    Ok(CmaesResult {
        best,
        best_fitness,
        trace,
        evaluations,
        initial_sigma: width.iter().map(|w| w * config.sigma_fraction).collect(),
        final_mean: to_x(&mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize, start: f64, seed_value: u64) -> CmaesConfig {
        CmaesConfig::new(vec![0.0; n], vec![1.0; n], vec![start; n], seed_value)
    }

    #[test]
    fn sphere_converges() {
        let r = cma_es(|x, _| x.iter().map(|v| (v - 0.5).powi(2)).sum(), &unit_box(6, 0.2, 1)).unwrap();
        for v in &r.best {
            assert!((v - 0.5).abs() < 1e-3, "{:?}", r.best);
        }
        assert_eq!(r.evaluations, 1 + 20 * 50);
    }

    #[test]
    fn constant_objective_keeps_start() {
        let cfg = unit_box(3, 0.3, 2);
        let r = cma_es(|_, _| 1.0, &cfg).unwrap();
        assert_eq!(r.best, cfg.initial);
        assert!(r.trace.iter().all(|&t| t == 1.0));
    }

    #[test]
    fn corner_optimum_under_clipping() {
        let r = cma_es(|x, _| x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>().sqrt(), &unit_box(6, 0.5, 3)).unwrap();
        for v in &r.best {
            assert!((v - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn trace_never_increases_and_run_repeats() {
        let noisy = |x: &[f64], s: u64| x.iter().map(|v| v * v).sum::<f64>() + (s % 1000) as f64 * 1e-6;
        let cfg = unit_box(4, 0.9, 4);
        let a = cma_es(noisy, &cfg).unwrap();
        assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        let b = cma_es(noisy, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_is_worst() {
        let r = cma_es(|x, _| if x[0] > 0.6 { f64::NAN } else { (x[0] - 0.6).powi(2) }, &unit_box(1, 0.1, 5)).unwrap();
        assert!(r.best_fitness.is_finite());
        assert!(r.best[0] <= 0.6);
    }

    #[test]
    fn scaled_bounds() {
        let cfg = CmaesConfig::new(vec![0.01, 0.8], vec![0.1, 0.99], vec![0.05, 0.9], 6);
        let r = cma_es(|x, _| (x[0] - 0.07).powi(2) + (x[1] - 0.95).powi(2), &cfg).unwrap();
        assert!((r.best[0] - 0.07).abs() < 1e-3 && (r.best[1] - 0.95).abs() < 1e-3);
        assert!((r.initial_sigma[0] - 0.027).abs() < 1e-12);
    }

    #[test]
    fn rejects_start_outside_box() {
        assert!(cma_es(|_, _| 0.0, &CmaesConfig::new(vec![0.0], vec![1.0], vec![2.0], 0)).is_err());
    }
}
