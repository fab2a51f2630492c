//! Inferring a country's capability set and production parameters from its
//! export basket.

mod kde;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use kde::{isj_bandwidth, isj_bandwidth_weighted, silverman, Bandwidth, BandwidthMethod, KdeModel};

use crate::capability::{capability_k1, set_k1, shares_from_densities, CapabilitySpace, ProductCatalog, Rho};
use crate::seed;
use crate::{Error, Result};

pub const EPS: f64 = 1e-10;

/// Clip to `[EPS, 1]` and renormalize.
pub fn clip_normalize(v: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = v.iter().map(|x| x.clamp(EPS, 1.0)).collect();
    let total: f64 = c.iter().sum();
    c.into_iter().map(|x| x / total).collect()
}

/// Strictly positive distribution over catalog products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetVector {
    values: Vec<f64>,
    pub bandwidth: Option<Bandwidth>,
}

impl TargetVector {
    /// Normalize, clip and renormalize arbitrary non-negative mass.
    pub fn from_shares(shares: &[f64]) -> Result<Self> {
        let total: f64 = shares.iter().sum();
        if shares.is_empty() || !(total > 0.0) || shares.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Validation("target needs non-negative mass with a positive total".into()));
        }
        let norm: Vec<f64> = shares.iter().map(|x| x / total).collect();
        Ok(Self { values: clip_normalize(&norm), bandwidth: None })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Export-share density over PCI, evaluated at each catalog product's
/// scaled complexity.
pub fn target_vector(exports: &[f64], pci: &[f64], catalog: &ProductCatalog) -> Result<TargetVector> {
    if exports.len() != pci.len() {
        return Err(Error::Validation("export row and PCI vector differ in length".into()));
    }
    let total: f64 = exports.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Validation("country has no exports".into()));
    }
    // the fit sorts before normalizing, so input order cannot leak in
    let kde = KdeModel::fit(pci, exports)?;
    let raw: Vec<f64> = catalog.products.iter().map(|p| kde.density(p.k_scaled)).collect();
    let mut t = TargetVector::from_shares(&raw)?;
    t.bandwidth = Some(kde.bandwidth);
    Ok(t)
}

/// `Σ p ln(p/q)` after clipping both vectors to `[1e-10, 1]` and renormalizing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::Validation("KL divergence needs equal non-empty vectors".into()));
    }
    let (p, q) = (clip_normalize(p), clip_normalize(q));
    Ok(p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clarity {
    /// `1 − KL(target‖predicted) / KL(target‖uniform)`.
    pub clarity: Option<f64>,
    pub ratio: Option<f64>,
}

/// `None` entries mean the target is already uniform.
pub fn clarity(target: &[f64], predicted: &[f64]) -> Result<Clarity> {
    let uniform = vec![1.0 / target.len().max(1) as f64; target.len()];
    let base = kl_divergence(target, &uniform)?;
    if base <= 0.0 {
        log::warn!("clarity undefined: target is uniform");
        return Ok(Clarity { clarity: None, ratio: None });
    }
    let ratio = kl_divergence(target, predicted)? / base;
    Ok(Clarity { clarity: Some(1.0 - ratio), ratio: Some(ratio) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acceptance {
    Metropolis,
    /// Never accept a worse candidate.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub iterations: usize,
    pub t0: f64,
    pub cooling: f64,
    pub restarts: usize,
    pub acceptance: Acceptance,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { iterations: 100, t0: 1.0, cooling: 0.95, restarts: 5, acceptance: Acceptance::Metropolis }
    }
}

impl AnnealSchedule {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.restarts == 0 || !(self.t0 > 0.0) || !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::Validation("annealing schedule must be positive with cooling in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Shared state for scoring capability sets against one target.
pub struct Problem<'a> {
    pub space: &'a CapabilitySpace,
    pub catalog: &'a ProductCatalog,
    pub target: &'a TargetVector,
}

impl Problem<'_> {
    pub fn shares(&self, set: &[usize], rho: Rho, nu: f64) -> Result<Vec<f64>> {
        let d = crate::capability::country_densities(self.space, set)?;
        shares_from_densities(&d, self.catalog, rho, nu)
    }

    pub fn kl(&self, set: &[usize], rho: Rho, nu: f64) -> Result<f64> {
        kl_divergence(self.target.values(), &self.shares(set, rho, nu)?)
    }

    /// Capability set of the product with the largest target entry.
    pub fn default_warm_start(&self) -> Vec<usize> {
        let values = self.target.values();
        let top = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
        self.catalog.products[top].capabilities.clone()
    }
}

/// Flip weights: mean proximity to the set for outsiders, one minus it for
/// members, 0.5 for the sole member of a singleton.
pub fn flip_weights(phi: &nalgebra::DMatrix<f64>, members: &[bool], set: &[usize]) -> Vec<f64> {
    let k = set.len() as f64;
    (0..members.len())
        .map(|i| {
            let mean = set.iter().map(|&a| phi[(i, a)]).sum::<f64>() / k;
            match (members[i], set.len()) {
                (true, 1) => 0.5,
                (true, _) => 1.0 - mean,
                (false, _) => mean,
            }
        })
        .collect()
}

fn perturb<R: Rng>(phi: &nalgebra::DMatrix<f64>, set: &[usize], temperature: f64, rng: &mut R) -> Vec<usize> {
    let n = phi.nrows();
    let mut members = vec![false; n];
    for &a in set {
        members[a] = true;
    }
    let mut weights = flip_weights(phi, &members, set);
    let available = weights.iter().filter(|&&w| w > 0.0).count();
    let flips = ((3.0 * temperature).round_ties_even() as usize).min(available);
    for _ in 0..flips {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if u < w {
                    break;
                }
                u -= w;
            }
        }
        let i = pick.expect("positive weight available");
        members[i] = !members[i];
        weights[i] = 0.0;
    }
    (0..n).filter(|&i| members[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome {
    pub capabilities: Vec<usize>,
    pub kl: f64,
    pub warm_start_kl: f64,
    /// KL of the current state after each iteration of every restart.
    pub trace: Vec<Vec<f64>>,
    /// Mean acceptance probability of worsening proposals.
    pub acceptance_rate: Option<f64>,
}

/// Simulated annealing over capability sets, best of several restarts from
/// the same warm start.
pub fn anneal_capabilities(
    problem: &Problem<'_>,
    rho: Rho,
    nu: f64,
    warm_start: &[usize],
    schedule: &AnnealSchedule,
    seed_value: u64,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    if warm_start.is_empty() {
        return Err(Error::Validation("warm start set is empty".into()));
    }
    let mut warm = warm_start.to_vec();
    warm.sort_unstable();
    warm.dedup();
    if warm.iter().any(|&a| a >= problem.space.n_capabilities()) {
        return Err(Error::Validation("warm start refers to unknown capabilities".into()));
    }
    let warm_kl = problem.kl(&warm, rho, nu)?;
    let score = |set: &[usize]| problem.kl(set, rho, nu).map_or(f64::NEG_INFINITY, |kl| -kl);
    let phi = problem.space.phi();

    let mut best = warm.clone();
    let mut best_score = -warm_kl;
    let mut trace = Vec::with_capacity(schedule.restarts);
    let mut probs = Vec::new();
    for r in 0..schedule.restarts {
        let mut rng = seed::rng(seed::derive(seed_value, &[r as u64]));
        let mut current = warm.clone();
        let mut current_score = -warm_kl;
        let mut temp = schedule.t0;
        let mut run = Vec::with_capacity(schedule.iterations);
        for _ in 0..schedule.iterations {
            let candidate = perturb(phi, &current, temp, &mut rng);
            if !candidate.is_empty() {
                let cand = score(&candidate);
                let delta = cand - current_score;
                if cand < current_score {
                    probs.push((delta / temp).exp());
                }
                let accept = match schedule.acceptance {
                    Acceptance::Metropolis => cand > current_score || rng.random::<f64>() < (delta / temp).exp(),
                    Acceptance::Greedy => cand >= current_score,
                };
                if accept {
                    current = candidate;
                    current_score = cand;
                    if cand > best_score {
                        best = current.clone();
                        best_score = cand;
                    }
                }
            }
            run.push(-current_score);
            temp *= schedule.cooling;
        }
        trace.push(run);
    }
    let acceptance_rate = (!probs.is_empty()).then(|| probs.iter().sum::<f64>() / probs.len() as f64);
    Ok(AnnealOutcome { capabilities: best, kl: -best_score, warm_start_kl: warm_kl, trace, acceptance_rate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub rho_grid: Vec<Rho>,
    pub nu_grid: Vec<f64>,
    pub schedule: AnnealSchedule,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            rho_grid: vec![Rho::Finite(1.0), Rho::Finite(0.0), Rho::Finite(-3.0), Rho::Finite(-9.0), Rho::NegInfinity],
            nu_grid: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            schedule: AnnealSchedule::default(),
        }
    }
}

impl InferenceConfig {
    /// Linear production: capabilities only.
    pub fn capabilities_only() -> Self {
        Self { rho_grid: vec![Rho::Finite(1.0)], nu_grid: vec![1.0], ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub capabilities: Vec<usize>,
    pub kl: f64,
    pub clarity: Option<f64>,
    pub kl_ratio: Option<f64>,
    pub rho: Rho,
    pub nu: f64,
    pub k0: usize,
    pub k1: f64,
    /// `(ρ, KL)` from the first stage at ν = 1.
    pub rho_scan: Vec<(Rho, f64)>,
    /// `(ν, KL)` from the second stage at the chosen ρ.
    pub nu_scan: Vec<(f64, f64)>,
}

/// Pick ρ at ν = 1, then ν at that ρ warm-started from the best set. Ties
/// keep the earlier grid value.
pub fn optimize_rho_nu(problem: &Problem<'_>, config: &InferenceConfig, seed_value: u64) -> Result<InferenceResult> {
    if config.rho_grid.is_empty() || config.nu_grid.is_empty() {
        return Err(Error::Validation("empty parameter grid".into()));
    }
    let warm = problem.default_warm_start();
    let mut rho_scan = Vec::new();
    let mut stage1: Option<(Rho, AnnealOutcome)> = None;
    for (i, &rho) in config.rho_grid.iter().enumerate() {
        let out = anneal_capabilities(problem, rho, 1.0, &warm, &config.schedule, seed::derive(seed_value, &[1, i as u64]))?;
        rho_scan.push((rho, out.kl));
        if stage1.as_ref().is_none_or(|(_, b)| out.kl < b.kl) {
            stage1 = Some((rho, out));
        }
    }
    let (rho, first) = stage1.unwrap();
    let mut nu_scan = Vec::new();
    let mut stage2: Option<(f64, AnnealOutcome)> = None;
    for (i, &nu) in config.nu_grid.iter().enumerate() {
        let out = anneal_capabilities(
            problem,
            rho,
            nu,
            &first.capabilities,
            &config.schedule,
            seed::derive(seed_value, &[2, i as u64]),
        )?;
        nu_scan.push((nu, out.kl));
        if stage2.as_ref().is_none_or(|(_, b)| out.kl < b.kl) {
            stage2 = Some((nu, out));
        }
    }
    let (nu, best) = stage2.unwrap();
    let predicted = problem.shares(&best.capabilities, rho, nu)?;
    let c = clarity(problem.target.values(), &predicted)?;
    let k1 = set_k1(&capability_k1(problem.catalog, problem.space.n_capabilities()), &best.capabilities)?;
    Ok(InferenceResult {
        k0: best.capabilities.len(),
        capabilities: best.capabilities,
        kl: best.kl,
        clarity: c.clarity,
        kl_ratio: c.ratio,
        rho,
        nu,
        k1,
        rho_scan,
        nu_scan,
    })
}
