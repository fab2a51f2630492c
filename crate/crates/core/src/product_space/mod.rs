//! The Product Space: product–product proximity network and the topology
//! statistics used to compare empirical and simulated networks.
//!
//! Zero-weight pairs are absent edges. The diagonal (self-proximity) is
//! stored as 0 and never counted as an edge.

mod leiden;

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use leiden::{leiden, LeidenConfig};

pub use crate::stats::{ks_two_sample, pearson, summary_stats, DistributionSummary};
use crate::trade::SpecializationMatrix;
use crate::{Error, Result};

pub const CENTRALITY_TOL: f64 = 1e-10;
pub const CENTRALITY_MAX_ITER: usize = 10_000;

/// Symmetric proximity matrix over products.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityNetwork {
    phi: DMatrix<f64>,
    pub products: Vec<String>,
    /// Complexity aligned with `products`, when known.
    pub pci: Option<Vec<f64>>,
}

impl ProximityNetwork {
    /// Wrap a matrix. It must be square, exactly symmetric, with entries in
    /// `[0, 1]`; the diagonal is zeroed.
    pub fn new(mut phi: DMatrix<f64>, products: Vec<String>) -> Result<Self> {
        let n = phi.nrows();
        if phi.ncols() != n || products.len() != n {
            return Err(Error::Validation("proximity matrix must be square and match product codes".into()));
        }
        for i in 0..n {
            phi[(i, i)] = 0.0;
            for j in 0..i {
                if phi[(i, j)] != phi[(j, i)] {
                    return Err(Error::Validation(format!("proximity not symmetric at ({i},{j})")));
                }
                if !(0.0..=1.0).contains(&phi[(i, j)]) {
                    return Err(Error::Validation(format!("proximity {} outside [0,1]", phi[(i, j)])));
                }
            }
        }
        Ok(Self { phi, products, pci: None })
    }

    pub fn with_pci(mut self, pci: Vec<f64>) -> Result<Self> {
        if pci.len() != self.len() {
            return Err(Error::Validation("PCI vector length does not match network".into()));
        }
        self.pci = Some(pci);
        Ok(self)
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unordered pairs `(i, j, w)` with `i < j` and `w > 0`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |j| (0..j).map(move |i| (i, j, self.phi[(i, j)]))).filter(|e| e.2 > 0.0)
    }

    pub fn positive_weights(&self) -> Vec<f64> {
        self.edges().map(|e| e.2).collect()
    }

    /// Unweighted degree (number of positive-weight neighbours).
    pub fn degrees(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| (0..n).filter(|&j| j != i && self.phi[(i, j)] > 0.0).count() as f64).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Row-major copy of the weights.
    fn row_major(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.phi[(i, j)]);
            }
        }
        out
    }

    /// `i,j,weight` rows for each edge.
    pub fn write_edges_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "weight"])?;
        for (i, j, x) in self.edges() {
            out.write_record([self.products[i].as_str(), self.products[j].as_str(), &format!("{x}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `φ_ij = min{P(M_i | M_j), P(M_j | M_i)} = (MᵀM)_ij / max(k_i, k_j)`.
pub fn proximity_matrix(s: &SpecializationMatrix) -> Result<ProximityNetwork> {
    if !s.is_pruned() {
        return Err(Error::NeedsPruning("proximity needs a pruned specialization matrix".into()));
    }
    let m = s.matrix();
    let co = m.tr_mul(m);
    let u = s.ubiquity();
    let n = s.n_products();
    let mut phi = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v = co[(i, j)] / u[i].max(u[j]) as f64;
            phi[(i, j)] = v;
            phi[(j, i)] = v;
        }
    }
    ProximityNetwork::new(phi, s.products.clone())
}

/// `ω = D⁻¹ M Φ`: average proximity from each country's basket to each product.
pub fn density_omega(s: &SpecializationMatrix, net: &ProximityNetwork) -> Result<DMatrix<f64>> {
    if s.n_products() != net.len() {
        return Err(Error::Validation("network and specialization matrix are not aligned".into()));
    }
    if !s.is_pruned() {
        return Err(Error::NeedsPruning("density needs a pruned specialization matrix".into()));
    }
    let mut w = s.matrix() * net.phi();
    for (c, mut row) in w.row_iter_mut().enumerate() {
        row /= s.diversity()[c] as f64;
    }
    Ok(w)
}

/// Share of possible edges that are present.
pub fn graph_density(net: &ProximityNetwork) -> Result<f64> {
    let p = net.len();
    if p < 2 {
        return Err(Error::Validation("graph density needs at least 2 nodes".into()));
    }
    Ok(2.0 * net.edge_count() as f64 / (p as f64 * (p as f64 - 1.0)))
}

/// Global clustering coefficient of the unweighted skeleton.
pub fn transitivity(net: &ProximityNetwork) -> f64 {
    let n = net.len();
    let words = n.div_ceil(64);
    let mut adj = vec![0u64; n * words];
    for (i, j, _) in net.edges() {
        adj[i * words + j / 64] |= 1 << (j % 64);
        adj[j * words + i / 64] |= 1 << (i % 64);
    }
    let deg: Vec<u64> = (0..n).map(|i| adj[i * words..(i + 1) * words].iter().map(|w| w.count_ones() as u64).sum()).collect();
    let triplets: u64 = deg.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    if triplets == 0 {
        return 0.0;
    }
    // Σ over edges of common neighbours = 3 × triangles
    let closed: u64 = net
        .edges()
        .map(|(i, j, _)| {
            let (a, b) = (&adj[i * words..(i + 1) * words], &adj[j * words..(j + 1) * words]);
            a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum::<u64>()
        })
        .sum();
    closed as f64 / triplets as f64
}

/// Community assignment with ids contiguous from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition(Vec<usize>);

impl Partition {
    /// Relabel arbitrary ids to contiguous ids in order of first appearance.
    pub fn new(raw: Vec<usize>) -> Self {
        let mut map = std::collections::HashMap::new();
        let ids = raw
            .into_iter()
            .map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
            .collect();
        Partition(ids)
    }

    pub fn single(n: usize) -> Self {
        Partition(vec![0; n])
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.0.iter().copied().max().map_or(0, |m| m + 1)
    }
}

pub(crate) fn modularity_of(w: &[f64], n: usize, comm: &[usize], gamma: f64) -> f64 {
    let k = comm.iter().copied().max().map_or(0, |m| m + 1);
    let mut inside = vec![0.0; k];
    let mut tot = vec![0.0; k];
    let mut two_m = 0.0;
    for i in 0..n {
        let row = &w[i * n..(i + 1) * n];
        let ci = comm[i];
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                two_m += x;
                tot[ci] += x;
                if comm[j] == ci {
                    inside[ci] += x;
                }
            }
        }
    }
    if two_m == 0.0 {
        return 0.0;
    }
    (0..k).map(|c| inside[c] / two_m - gamma * (tot[c] / two_m).powi(2)).sum()
}

/// Weighted modularity `Q = (1/2m) Σ_ij [Φ_ij − s_i s_j / 2m] δ(C_i, C_j)`.
pub fn modularity(net: &ProximityNetwork, part: &Partition) -> Result<f64> {
    if part.len() != net.len() {
        return Err(Error::Validation("partition length does not match node count".into()));
    }
    Ok(modularity_of(&net.row_major(), net.len(), part.ids(), 1.0))
}

/// Leiden partition (resolution 1, up to 10 iterations), seeded.
pub fn leiden_partition(net: &ProximityNetwork, seed: u64) -> Partition {
    leiden(&net.row_major(), net.len(), &LeidenConfig { seed, ..LeidenConfig::default() })
}

/// Equal-width bins over `[min(pci), max(pci)]`.
pub fn pci_bin_partition(pci: &[f64], n_bins: usize) -> Result<Partition> {
    if n_bins < 1 {
        return Err(Error::Validation("need at least one bin".into()));
    }
    if pci.is_empty() {
        return Ok(Partition::new(vec![]));
    }
    let lo = pci.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pci.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let raw = pci
        .iter()
        .map(|&x| if width > 0.0 { (((x - lo) / width) as usize).min(n_bins - 1) } else { 0 })
        .collect::<Vec<_>>();
    // order communities by bin index, skipping empty bins
    let mut used: Vec<usize> = raw.clone();
    used.sort_unstable();
    used.dedup();
    Ok(Partition(raw.iter().map(|b| used.binary_search(b).unwrap()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PciBinning {
    pub best_bins: usize,
    pub best_modularity: f64,
    /// `(n_bins, modularity)` for every scanned bin count.
    pub scan: Vec<(usize, f64)>,
}

/// Scan `1..=max_bins` equal-width PCI binnings and keep the most modular.
pub fn best_pci_binning(net: &ProximityNetwork, pci: &[f64], max_bins: usize) -> Result<PciBinning> {
    let w = net.row_major();
    let mut scan = Vec::with_capacity(max_bins);
    for n in 1..=max_bins.max(1) {
        let part = pci_bin_partition(pci, n)?;
        if part.len() != net.len() {
            return Err(Error::Validation("PCI vector length does not match network".into()));
        }
        scan.push((n, modularity_of(&w, net.len(), part.ids(), 1.0)));
    }
    let (best_bins, best_modularity) =
        scan.iter().copied().fold((1, f64::NEG_INFINITY), |b, s| if s.1 > b.1 { s } else { b });
    Ok(PciBinning { best_bins, best_modularity, scan })
}

/// Eigenvector centrality by power iteration on `Φ + I` (the shift keeps
/// bipartite components from oscillating), scaled so the maximum is 1.
pub fn eigenvector_centrality(net: &ProximityNetwork) -> Result<Vec<f64>> {
    let n = net.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let phi = net.phi();
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let mut residual = f64::INFINITY;
    for _ in 0..CENTRALITY_MAX_ITER {
        let px = phi * &x;
        let lambda = px.dot(&x) / x.dot(&x);
        residual = (&px - &x * lambda).amax() / x.amax().max(f64::MIN_POSITIVE);
        if residual <= CENTRALITY_TOL {
            break;
        }
        let next = px + &x;
        let mx = next.amax();
        if mx == 0.0 {
            return Ok(vec![0.0; n]);
        }
        x = next / mx;
    }
    if residual > CENTRALITY_TOL {
        return Err(Error::Numerical(format!(
            "eigenvector centrality did not converge in {CENTRALITY_MAX_ITER} iterations (residual {residual:.3e})"
        )));
    }
    let mx = x.amax();
    Ok(x.iter().map(|v| (v / mx).max(0.0)).collect())
}

/// Remove the lowest-weight simulated edges so the simulated network loses
/// the same fraction of pairs that are absent in the empirical one.
pub fn adaptive_threshold(empirical: &ProximityNetwork, simulated: &ProximityNetwork) -> Result<ProximityNetwork> {
    let p = empirical.len();
    let pairs = p * p.saturating_sub(1) / 2;
    let q = if pairs == 0 { 0.0 } else { 1.0 - empirical.edge_count() as f64 / pairs as f64 };
    let mut edges: Vec<(usize, usize, f64)> = simulated.edges().collect();
    let remove = ((q * edges.len() as f64).round() as usize).min(edges.len());
    edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut phi = simulated.phi.clone();
    for &(i, j, _) in &edges[..remove] {
        phi[(i, j)] = 0.0;
        phi[(j, i)] = 0.0;
    }
    Ok(ProximityNetwork { phi, products: simulated.products.clone(), pci: simulated.pci.clone() })
}

/// Correlation between `|PCI_i − PCI_j|` and `φ_ij` over positive-weight pairs.
pub fn delta_pci_proximity_correlation(net: &ProximityNetwork, pci: &[f64]) -> Result<f64> {
    let (dp, w): (Vec<f64>, Vec<f64>) = net.edges().map(|(i, j, x)| ((pci[i] - pci[j]).abs(), x)).unzip();
    pearson(&dp, &w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    pub transitivity: f64,
    pub leiden_modularity: f64,
    pub leiden_communities: usize,
    pub pci_modularity: Option<f64>,
    pub pci_best_bins: Option<usize>,
    pub pci_centrality_correlation: Option<f64>,
    pub delta_pci_proximity_correlation: Option<f64>,
    pub weight: Option<DistributionSummary>,
    pub degree: Option<DistributionSummary>,
    pub centrality: Option<DistributionSummary>,
}

/// Every topology statistic of one network. PCI-based entries are filled
/// when the network carries a PCI vector.
pub fn network_report(net: &ProximityNetwork, seed: u64) -> Result<NetworkReport> {
    let weights = net.positive_weights();
    let degrees = net.degrees();
    let centrality = eigenvector_centrality(net)?;
    let part = leiden_partition(net, seed);
    let leiden_q = modularity(net, &part)?;
    let (mut pci_q, mut pci_bins, mut pc_r, mut dp_r) = (None, None, None, None);
    if let Some(pci) = &net.pci {
        let b = best_pci_binning(net, pci, 20)?;
        pci_q = Some(b.best_modularity);
        pci_bins = Some(b.best_bins);
        pc_r = pearson(pci, &centrality).ok();
        dp_r = delta_pci_proximity_correlation(net, pci).ok();
    }
    Ok(NetworkReport {
        nodes: net.len(),
        edges: weights.len(),
        density: graph_density(net)?,
        transitivity: transitivity(net),
        leiden_modularity: leiden_q,
        leiden_communities: part.n_communities(),
        pci_modularity: pci_q,
        pci_best_bins: pci_bins,
        pci_centrality_correlation: pc_r,
        delta_pci_proximity_correlation: dp_r,
        weight: summary_stats(&weights).ok(),
        degree: summary_stats(&degrees).ok(),
        centrality: summary_stats(&centrality).ok(),
    })
}
