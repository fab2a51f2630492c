//! Generative model: mixture fit over PCI, block-structured capability
//! space, product formation and CES production.

pub mod catalog;
pub mod ces;
pub mod gmm;
pub mod space;

use serde::{Deserialize, Serialize};

pub use catalog::{
    attach, attachment_probabilities, capability_k1, generate_catalog, generate_product, set_k1, set_proximity_avg,
    set_proximity_max, simulated_product_space, Product, ProductCatalog,
};
pub use ces::{ces_aggregate, ces_output, country_densities, export_shares, shares_from_densities, Rho};
pub use gmm::{fit_gmm, gmm_ks_test, select_n_by_aic, AicSelection, GmmFit};
pub use space::{build_capability_space, BlockKind, BlockLayout, BlockParams, CapabilitySpace, ProximityMode};

use crate::product_space::ProximityNetwork;
use crate::seed;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Constant,
    Beta,
}

/// Fixed settings of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_products: usize,
    pub cap_max: usize,
    pub block_size: usize,
    pub mode: ModeKind,
    /// Beta concentration; defaults to the number of products.
    pub kappa: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { n_products: 1000, cap_max: 100, block_size: 25, mode: ModeKind::Constant, kappa: None }
    }
}

impl ModelConfig {
    pub fn proximity_mode(&self) -> ProximityMode {
        match self.mode {
            ModeKind::Constant => ProximityMode::Constant,
            ModeKind::Beta => ProximityMode::Beta { kappa: self.kappa.unwrap_or(self.n_products as f64) },
        }
    }
}

/// Everything one simulation produces.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub space: CapabilitySpace,
    pub catalog: ProductCatalog,
    pub network: ProximityNetwork,
}

/// Build the capability space, a catalog and its Product Space. The space
/// and catalog draw from independent streams derived from `seed_value`.
pub fn simulate(gmm: &GmmFit, pci_mean: f64, params: &BlockParams, config: &ModelConfig, seed_value: u64) -> Result<Simulation> {
    let cap_max = config.cap_max.min(config.block_size * gmm.n_components());
    let space = build_capability_space(
        gmm,
        pci_mean,
        params,
        config.block_size,
        config.proximity_mode(),
        seed::named(seed_value, "space"),
    )?;
    let catalog = generate_catalog(&space, gmm, config.n_products, cap_max, seed::named(seed_value, "catalog"))?;
    let network = simulated_product_space(&catalog, &space)?;
    Ok(Simulation { space, catalog, network })
}
