//! Products as capability sets: generation by preferential attachment,
//! set proximities, and capability-derived complexity.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::GmmFit;
use super::space::CapabilitySpace;
use crate::product_space::ProximityNetwork;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    /// Sorted, distinct capability indices.
    pub capabilities: Vec<usize>,
    pub k0: usize,
    /// Capability count mapped onto the PCI scale.
    pub k_scaled: f64,
    pub origin_block: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCatalog {
    /// Ascending by `k0`.
    pub products: Vec<Product>,
    pub gmm: GmmFit,
    pub cap_max: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub pci_min: f64,
    pub pci_max: f64,
}

impl ProductCatalog {
    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn k_scaled(&self) -> Vec<f64> {
        self.products.iter().map(|p| p.k_scaled).collect()
    }

    /// Build a catalog from explicit capability sets (scaled over `[pci_min, pci_max]`).
    pub fn from_sets(sets: Vec<Vec<usize>>, gmm: GmmFit, cap_max: usize) -> Result<Self> {
        let products = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    return Err(Error::Validation("a product needs at least one capability".into()));
                }
                Ok(Product { k0: s.len(), capabilities: s, k_scaled: 0.0, origin_block: 0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(products, gmm, cap_max))
    }

    fn assemble(mut products: Vec<Product>, gmm: GmmFit, cap_max: usize) -> Self {
        products.sort_by_key(|p| p.k0);
        let k_min = products.first().map_or(0, |p| p.k0);
        let k_max = products.last().map_or(0, |p| p.k0);
        let (pci_min, pci_max) = (gmm.data_min, gmm.data_max);
        for p in &mut products {
            p.k_scaled = if k_max > k_min {
                pci_min + (p.k0 - k_min) as f64 / (k_max - k_min) as f64 * (pci_max - pci_min)
            } else {
                0.5 * (pci_min + pci_max)
            };
        }
        Self { products, gmm, cap_max, k_min, k_max, pci_min, pci_max }
    }
}

/// Map a draw on the PCI scale to a capability count in `1..=cap_max`.
pub fn capability_count(g: f64, pci_min: f64, pci_max: f64, cap_max: usize) -> usize {
    let span = pci_max - pci_min;
    let raw = if span > 0.0 { 1.0 + (g - pci_min) / span * (cap_max as f64 - 1.0) } else { 1.0 };
    let k = raw.round_ties_even();
    if k.is_nan() {
        return 1;
    }
    k.clamp(1.0, cap_max as f64) as usize
}

/// Probability of adding each capability next: proportional to its mean
/// proximity from the current set, zero for capabilities already held.
pub fn attachment_probabilities(space: &CapabilitySpace, set: &[usize]) -> Vec<f64> {
    let phi = space.phi();
    let n = space.n_capabilities();
    let mut w = vec![0.0; n];
    for &a in set {
        for (j, x) in w.iter_mut().enumerate() {
            *x += phi[(a, j)];
        }
    }
    for &a in set {
        w[a] = 0.0;
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    w
}

/// Grow a set from `start` to `k` capabilities by preferential attachment.
pub fn attach<R: Rng>(space: &CapabilitySpace, start: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let phi = space.phi();
    let n = space.n_capabilities();
    let k = k.min(n);
    let mut held = vec![false; n];
    let mut sums = vec![0.0; n];
    let mut set = Vec::with_capacity(k);
    let add = |a: usize, held: &mut [bool], sums: &mut [f64], set: &mut Vec<usize>| {
        held[a] = true;
        set.push(a);
        for (j, s) in sums.iter_mut().enumerate() {
            *s += phi[(a, j)];
        }
    };
    add(start, &mut held, &mut sums, &mut set);
    while set.len() < k {
        let total: f64 = (0..n).filter(|&j| !held[j]).map(|j| sums[j]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for j in (0..n).filter(|&j| !held[j]) {
            pick = Some(j);
            if u < sums[j] {
                break;
            }
            u -= sums[j];
        }
        add(pick.expect("at least one free capability"), &mut held, &mut sums, &mut set);
    }
    set.sort_unstable();
    set
}

/// One product: pick a block by mixture weight, draw its complexity, turn it
/// into a capability count and grow a set from a random capability of the block.
pub fn generate_product<R: Rng>(space: &CapabilitySpace, gmm: &GmmFit, cap_max: usize, rng: &mut R) -> Result<Product> {
    if cap_max == 0 || cap_max > space.n_capabilities() {
        return Err(Error::Validation(format!(
            "cap_max {cap_max} must lie in 1..={}",
            space.n_capabilities()
        )));
    }
    let mut u = rng.random::<f64>();
    let mut component = gmm.n_components() - 1;
    for (c, w) in gmm.weights.iter().enumerate() {
        if u < *w {
            component = c;
            break;
        }
        u -= w;
    }
    let g = Normal::new(gmm.means[component], gmm.sds[component])
        .map_err(|e| Error::Numerical(format!("invalid mixture component: {e}")))?
        .sample(rng);
    let k = capability_count(g, gmm.data_min, gmm.data_max, cap_max);
    let block = space.layout.block_for_component(component).unwrap_or(0);
    let range = space.layout.blocks[block].capabilities.clone();
    let start = rng.random_range(range);
    let capabilities = attach(space, start, k, rng);
    Ok(Product { k0: capabilities.len(), capabilities, k_scaled: 0.0, origin_block: block })
}

/// `n_products` independent products, each on its own derived random stream.
pub fn generate_catalog(
    space: &CapabilitySpace,
    gmm: &GmmFit,
    n_products: usize,
    cap_max: usize,
    seed_value: u64,
) -> Result<ProductCatalog> {
    if n_products == 0 {
        return Err(Error::Validation("catalog needs at least one product".into()));
    }
    let products = (0..n_products)
        .into_par_iter()
        .map(|i| generate_product(space, gmm, cap_max, &mut seed::rng(seed::derive(seed_value, &[i as u64]))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductCatalog::assemble(products, gmm.clone(), cap_max))
}

fn check_sets(a1: &[usize], a2: &[usize]) -> Result<()> {
    if a1.is_empty() || a2.is_empty() {
        return Err(Error::Validation("set proximity needs non-empty sets".into()));
    }
    Ok(())
}

/// Mean of `Φ[a1, a2]` over all pairs.
pub fn set_proximity_avg(phi: &DMatrix<f64>, a1: &[usize], a2: &[usize]) -> Result<f64> {
    check_sets(a1, a2)?;
    let s: f64 = a1.iter().map(|&i| a2.iter().map(|&j| phi[(i, j)]).sum::<f64>()).sum();
    Ok(s / (a1.len() * a2.len()) as f64)
}

/// Mean over `a1` of the best match in `a2`.
pub fn set_proximity_max_directed(phi: &DMatrix<f64>, a1: &[usize], a2: &[usize]) -> Result<f64> {
    check_sets(a1, a2)?;
    let s: f64 = a1.iter().map(|&i| a2.iter().map(|&j| phi[(i, j)]).fold(f64::NEG_INFINITY, f64::max)).sum();
    Ok(s / a1.len() as f64)
}

/// Smaller of the two directed best-match proximities.
pub fn set_proximity_max(phi: &DMatrix<f64>, a1: &[usize], a2: &[usize]) -> Result<f64> {
    Ok(set_proximity_max_directed(phi, a1, a2)?.min(set_proximity_max_directed(phi, a2, a1)?))
}

/// Product Space implied by a catalog: average set proximity between
/// products, averaged over both directions so the result is symmetric even
/// when the capability space is not.
pub fn simulated_product_space(catalog: &ProductCatalog, space: &CapabilitySpace) -> Result<ProximityNetwork> {
    let np = catalog.len();
    if np == 0 {
        return Err(Error::Validation("empty catalog".into()));
    }
    let na = space.n_capabilities();
    let phi = space.phi();
    let sym = (phi + phi.transpose()) * 0.5;
    let mut b = DMatrix::<f64>::zeros(np, na);
    for (i, p) in catalog.products.iter().enumerate() {
        for &a in &p.capabilities {
            b[(i, a)] = 1.0;
        }
    }
    let bs = &b * sym;
    let sums = &bs * b.transpose();
    let mut out = DMatrix::zeros(np, np);
    for j in 0..np {
        let kj = catalog.products[j].k0 as f64;
        for i in 0..j {
            let v = (sums[(i, j)] / (catalog.products[i].k0 as f64 * kj)).clamp(0.0, 1.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    let codes = (0..np).map(|i| format!("s{i}")).collect();
    ProximityNetwork::new(out, codes)?.with_pci(catalog.k_scaled())
}

/// Mean `k0` of the products using each capability; `None` for unused ones.
pub fn capability_k1(catalog: &ProductCatalog, n_capabilities: usize) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; n_capabilities];
    let mut count = vec![0usize; n_capabilities];
    for p in &catalog.products {
        for &a in &p.capabilities {
            sum[a] += p.k0 as f64;
            count[a] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| (c > 0).then(|| s / c as f64)).collect()
}

/// Mean capability complexity over `set`, skipping capabilities no product uses.
pub fn set_k1(k1: &[Option<f64>], set: &[usize]) -> Result<f64> {
    let used: Vec<f64> = set.iter().filter_map(|&a| k1.get(a).copied().flatten()).collect();
    if used.len() < set.len() {
        log::warn!("{} capabilities unused by any product were left out of K1", set.len() - used.len());
    }
    if used.is_empty() {
        return Err(Error::Validation("no capability in the set is used by any product".into()));
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}
