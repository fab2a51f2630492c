//! Block-structured capability space.

use std::ops::Range;

use nalgebra::DMatrix;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::GmmFit;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Periphery,
    Core,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub capabilities: Range<usize>,
    /// Mixture component this block was built from.
    pub component: usize,
}

/// Blocks ordered from periphery to core (ascending component mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub blocks: Vec<Block>,
    pub periphery_size: usize,
    pub core_size: usize,
}

impl BlockLayout {
    /// A component becomes a core block when its mean exceeds `pci_mean`.
    pub fn new(gmm: &GmmFit, pci_mean: f64, periphery_size: usize, core_size: usize) -> Result<Self> {
        if periphery_size == 0 || core_size == 0 {
            return Err(Error::Validation("block size must be positive".into()));
        }
        let mut order: Vec<usize> = (0..gmm.n_components()).collect();
        order.sort_by(|&a, &b| gmm.means[a].total_cmp(&gmm.means[b]));
        let mut start = 0;
        let blocks = order
            .into_iter()
            .map(|c| {
                let kind = if gmm.means[c] > pci_mean { BlockKind::Core } else { BlockKind::Periphery };
                let size = if kind == BlockKind::Core { core_size } else { periphery_size };
                let b = Block { kind, capabilities: start..start + size, component: c };
                start += size;
                b
            })
            .collect();
        Ok(Self { blocks, periphery_size, core_size })
    }

    pub fn n_capabilities(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.capabilities.end)
    }

    pub fn block_of(&self, capability: usize) -> usize {
        self.blocks.partition_point(|b| b.capabilities.end <= capability)
    }

    /// Block built from mixture component `c`.
    pub fn block_for_component(&self, c: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.component == c)
    }
}

/// The six block-pair proximities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub periphery_between: f64,
    pub periphery_within: f64,
    pub periphery_to_core: f64,
    pub core_between: f64,
    pub core_within: f64,
    pub core_to_periphery: f64,
}

impl BlockParams {
    pub const NAMES: [&'static str; 6] = [
        "periphery_between",
        "periphery_within",
        "periphery_to_core",
        "core_between",
        "core_within",
        "core_to_periphery",
    ];

    pub fn to_array(self) -> [f64; 6] {
        [
            self.periphery_between,
            self.periphery_within,
            self.periphery_to_core,
            self.core_between,
            self.core_within,
            self.core_to_periphery,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            periphery_between: v[0],
            periphery_within: v[1],
            periphery_to_core: v[2],
            core_between: v[3],
            core_within: v[4],
            core_to_periphery: v[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Validation(format!("{name} = {v} is outside (0, 1]")));
            }
        }
        if self.periphery_between > self.periphery_within || self.core_between > self.core_within {
            return Err(Error::Validation("between-block proximity exceeds within-block proximity".into()));
        }
        Ok(())
    }

    fn value(&self, from: BlockKind, to: BlockKind, same_block: bool) -> f64 {
        use BlockKind::*;
        match (from, to, same_block) {
            (Periphery, Periphery, true) => self.periphery_within,
            (Core, Core, true) => self.core_within,
            (Periphery, Periphery, false) => self.periphery_between,
            (Core, Core, false) => self.core_between,
            (Periphery, Core, _) => self.periphery_to_core,
            (Core, Periphery, _) => self.core_to_periphery,
        }
    }
}

impl Default for BlockParams {
    fn default() -> Self {
        Self {
            periphery_between: 0.05,
            periphery_within: 0.9,
            periphery_to_core: 0.05,
            core_between: 0.05,
            core_within: 0.9,
            core_to_periphery: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ProximityMode {
    Constant,
    /// Each entry drawn from a Beta with the block value as mean and
    /// concentration `kappa`.
    Beta { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapabilitySpace {
    phi: DMatrix<f64>,
    pub layout: BlockLayout,
    pub params: BlockParams,
    pub mode: ProximityMode,
    pub seed: u64,
}

impl CapabilitySpace {
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn n_capabilities(&self) -> usize {
        self.phi.nrows()
    }

    /// Wrap an arbitrary relatedness matrix (diagonal forced to 1). Every
    /// capability is placed in one periphery block.
    pub fn from_matrix(mut phi: DMatrix<f64>) -> Result<Self> {
        let n = phi.nrows();
        if phi.ncols() != n || n == 0 {
            return Err(Error::Validation("capability matrix must be square and non-empty".into()));
        }
        if phi.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Validation("capability proximities must lie in (0, 1]".into()));
        }
        phi.fill_diagonal(1.0);
        let layout = BlockLayout {
            blocks: vec![Block { kind: BlockKind::Periphery, capabilities: 0..n, component: 0 }],
            periphery_size: n,
            core_size: n,
        };
        Ok(Self { phi, layout, params: BlockParams::default(), mode: ProximityMode::Constant, seed: 0 })
    }
}

pub fn build_capability_space(
    gmm: &GmmFit,
    pci_mean: f64,
    params: &BlockParams,
    block_size: usize,
    mode: ProximityMode,
    seed_value: u64,
) -> Result<CapabilitySpace> {
    params.validate()?;
    if let ProximityMode::Beta { kappa } = mode {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Validation(format!("kappa must be positive, got {kappa}")));
        }
    }
    let layout = BlockLayout::new(gmm, pci_mean, block_size, block_size)?;
    let n = layout.n_capabilities();
    let blocks: Vec<usize> = (0..n).map(|a| layout.block_of(a)).collect();
    let mean_of = |i: usize, j: usize| {
        let (bi, bj) = (&layout.blocks[blocks[i]], &layout.blocks[blocks[j]]);
        params.value(bi.kind, bj.kind, blocks[i] == blocks[j])
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed_value, &[i as u64]));
            (0..n)
                .map(|j| {
                    let mu = mean_of(i, j);
                    match mode {
                        _ if i == j => 1.0,
                        ProximityMode::Constant => mu,
                        // a mean of exactly 1 is a point mass
                        ProximityMode::Beta { .. } if mu >= 1.0 => 1.0,
                        ProximityMode::Beta { kappa } => {
                            let d = Beta::new(kappa * mu, kappa * (1.0 - mu)).expect("positive shape parameters");
                            d.sample(&mut rng).max(f64::MIN_POSITIVE)
                        }
                    }
                })
                .collect()
        })
        .collect();
    let phi = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(CapabilitySpace { phi, layout, params: *params, mode, seed: seed_value })
}
