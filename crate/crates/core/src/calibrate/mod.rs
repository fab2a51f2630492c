//! Fit the six block proximities so the simulated Product Space reproduces
//! the empirical edge-weight distribution, then compare the two networks.

mod cmaes;

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

pub use cmaes::{cma_es, CmaesConfig, CmaesResult};

use crate::capability::{simulate, BlockParams, GmmFit, ModelConfig};
use crate::product_space::{adaptive_threshold, eigenvector_centrality, network_report, NetworkReport, ProximityNetwork};
use crate::stats::{ks_two_sample, mean};
use crate::{seed, Error, Result};

/// Box for the between-type and within-type proximities.
pub const BETWEEN_BOUNDS: (f64, f64) = (0.01, 0.1);
pub const WITHIN_BOUNDS: (f64, f64) = (0.8, 0.99);
pub const BETWEEN_START: f64 = 0.05;
pub const WITHIN_START: f64 = 0.9;

/// Which of the six parameters are within-block values.
const IS_WITHIN: [bool; 6] = [false, true, false, false, true, false];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
    pub initial: [f64; 6],
    pub population: usize,
    pub generations: usize,
    pub sigma_fraction: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let pick = |w: bool, a: f64, b: f64| if w { a } else { b };
        Self {
            lower: IS_WITHIN.map(|w| pick(w, WITHIN_BOUNDS.0, BETWEEN_BOUNDS.0)),
            upper: IS_WITHIN.map(|w| pick(w, WITHIN_BOUNDS.1, BETWEEN_BOUNDS.1)),
            initial: IS_WITHIN.map(|w| pick(w, WITHIN_START, BETWEEN_START)),
            population: 20,
            generations: 50,
            sigma_fraction: 0.3,
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

/// Empirical-versus-simulated topology after adaptive thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub empirical: NetworkReport,
    pub simulated: NetworkReport,
    /// `(D, p)` two-sample KS statistics.
    pub weight_ks: (f64, f64),
    pub degree_ks: (f64, f64),
    pub centrality_ks: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: BlockParams,
    pub best_ks: f64,
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub initial_sigma: Vec<f64>,
    /// Candidates whose between value exceeded the within value.
    pub repairs: usize,
    pub comparison: Comparison,
}

/// Swap between/within values that ended up out of order.
pub fn repair(x: &[f64]) -> (BlockParams, bool) {
    let mut p = BlockParams::from_slice(x);
    let mut swapped = false;
    if p.periphery_between > p.periphery_within {
        std::mem::swap(&mut p.periphery_between, &mut p.periphery_within);
        swapped = true;
    }
    if p.core_between > p.core_within {
        std::mem::swap(&mut p.core_between, &mut p.core_within);
        swapped = true;
    }
    (p, swapped)
}

fn pci_of(net: &ProximityNetwork) -> Result<&[f64]> {
    net.pci.as_deref().ok_or_else(|| Error::Validation("network carries no PCI vector".into()))
}

/// KS distance between the positive edge weights of two networks.
pub fn weight_distance(a: &ProximityNetwork, b: &ProximityNetwork) -> Result<f64> {
    Ok(ks_two_sample(&a.positive_weights(), &b.positive_weights())?.0)
}

pub fn compare_networks(empirical: &ProximityNetwork, simulated: &ProximityNetwork, seed_value: u64) -> Result<Comparison> {
    let sim = adaptive_threshold(empirical, simulated)?;
    let emp_report = network_report(empirical, seed_value)?;
    let sim_report = network_report(&sim, seed_value)?;
    Ok(Comparison {
        weight_ks: ks_two_sample(&empirical.positive_weights(), &sim.positive_weights())?,
        degree_ks: ks_two_sample(&empirical.degrees(), &sim.degrees())?,
        centrality_ks: ks_two_sample(&eigenvector_centrality(empirical)?, &eigenvector_centrality(&sim)?)?,
        empirical: emp_report,
        simulated: sim_report,
    })
}

/// Run CMA-ES over the six block proximities. Every candidate is simulated
/// with a seed derived from (run seed, generation, candidate index).
pub fn calibrate_block_params(
    empirical: &ProximityNetwork,
    gmm: &GmmFit,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let pci_mean = mean(pci_of(empirical)?);
    let emp_weights = empirical.positive_weights();
    if emp_weights.is_empty() {
        return Err(Error::Validation("empirical network has no edges".into()));
    }
    let repairs = AtomicUsize::new(0);
    let objective = |x: &[f64], s: u64| -> f64 {
        let (params, swapped) = repair(x);
        if swapped {
            repairs.fetch_add(1, Ordering::Relaxed);
            log::debug!("swapped out-of-order block proximities in {x:?}");
        }
        let eval = || -> Result<f64> {
            let sim = simulate(gmm, pci_mean, &params, &config.model, s)?;
            Ok(ks_two_sample(&emp_weights, &sim.network.positive_weights())?.0)
        };
        eval().unwrap_or_else(|e| {
            log::warn!("candidate {x:?} failed: {e}");
            f64::INFINITY
        })
    };
    let cma = CmaesConfig {
        lower: config.lower.to_vec(),
        upper: config.upper.to_vec(),
        initial: config.initial.to_vec(),
        population: config.population,
        generations: config.generations,
        sigma_fraction: config.sigma_fraction,
        seed: config.seed,
    };
    let run = cma_es(objective, &cma)?;
    let (params, _) = repair(&run.best);
    let final_sim = simulate(gmm, pci_mean, &params, &config.model, seed::named(config.seed, "final"))?;
    let comparison = compare_networks(empirical, &final_sim.network, config.seed)?;
    Ok(CalibrationResult {
        params,
        best_ks: run.best_fitness,
        trace: run.trace,
        evaluations: run.evaluations,
        initial_sigma: run.initial_sigma,
        repairs: repairs.into_inner(),
        comparison,
    })
}
