//! Leiden community detection (local moving, refinement, aggregation) on a
//! dense weighted graph, optimizing modularity with a resolution parameter.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{modularity_of, Partition};
use crate::seed::{self, Rng as SeedRng};

#[derive(Debug, Clone, Copy)]
pub struct LeidenConfig {
    pub resolution: f64,
    pub max_iterations: usize,
    /// Randomness of the refinement merge choice.
    pub theta: f64,
    pub seed: u64,
}

impl Default for LeidenConfig {
    fn default() -> Self {
        Self { resolution: 1.0, max_iterations: 10, theta: 0.01, seed: 0 }
    }
}

struct Graph {
    n: usize,
    w: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl Graph {
    fn from_dense(n: usize, w: Vec<f64>) -> Self {
        let strength: Vec<f64> = (0..n).map(|i| w[i * n..(i + 1) * n].iter().sum()).collect();
        let two_m = strength.iter().sum();
        Self { n, w, strength, two_m }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    fn aggregate(&self, membership: &[usize], k: usize) -> Graph {
        let mut w = vec![0.0; k * k];
        for i in 0..self.n {
            let ci = membership[i];
            let row = self.row(i);
            let out = &mut w[ci * k..(ci + 1) * k];
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    out[membership[j]] += x;
                }
            }
        }
        Graph::from_dense(k, w)
    }
}

/// Relabel to contiguous ids in order of first appearance; returns the count.
fn relabel(comm: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; comm.len().max(comm.iter().copied().max().map_or(0, |m| m + 1))];
    let mut next = 0;
    for c in comm.iter_mut() {
        if map[*c] == usize::MAX {
            map[*c] = next;
            next += 1;
        }
        *c = map[*c];
    }
    next
}

fn fast_move_nodes(g: &Graph, comm: &mut [usize], gamma: f64, rng: &mut SeedRng) -> bool {
    let n = g.n;
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for v in 0..n {
        tot[comm[v]] += g.strength[v];
        size[comm[v]] += 1;
    }
    let mut empty: Vec<usize> = (0..n).filter(|&c| size[c] == 0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: VecDeque<usize> = order.into_iter().collect();
    let mut in_queue = vec![true; n];
    let mut k_vc = vec![0.0; n];
    let mut touched = Vec::new();
    let mut moved_any = false;

    while let Some(v) = queue.pop_front() {
        in_queue[v] = false;
        let old = comm[v];
        let sv = g.strength[v];
        for (u, &x) in g.row(v).iter().enumerate() {
            if x != 0.0 && u != v {
                let c = comm[u];
                if k_vc[c] == 0.0 {
                    touched.push(c);
                }
                k_vc[c] += x;
            }
        }
        tot[old] -= sv;
        size[old] -= 1;
        let scale = gamma * sv / g.two_m;
        let mut best = old;
        let mut best_gain = k_vc[old] - scale * tot[old];
        for &c in &touched {
            let gain = k_vc[c] - scale * tot[c];
            if gain > best_gain {
                best = c;
                best_gain = gain;
            }
        }
        if best_gain < 0.0 && size[old] > 0 {
            // isolating v beats every neighbouring community
            if let Some(&e) = empty.last() {
                best = e;
            }
        }
        if best != old && size[old] == 0 {
            empty.push(old);
        }
        if best != old && size[best] == 0 {
            empty.retain(|&e| e != best);
        }
        tot[best] += sv;
        size[best] += 1;
        comm[v] = best;
        if best != old {
            moved_any = true;
            for (u, &x) in g.row(v).iter().enumerate() {
                if x != 0.0 && u != v && comm[u] != best && !in_queue[u] {
                    in_queue[u] = true;
                    queue.push_back(u);
                }
            }
        }
        for &c in &touched {
            k_vc[c] = 0.0;
        }
        touched.clear();
    }
    moved_any
}

fn refine_partition(g: &Graph, comm: &[usize], k: usize, gamma: f64, theta: f64, rng: &mut SeedRng) -> Vec<usize> {
    let n = g.n;
    let mut refined: Vec<usize> = (0..n).collect();
    let mut ref_tot = g.strength.clone();
    let mut singleton = vec![true; n];
    let mut ext = vec![0.0; n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for v in 0..n {
        members[comm[v]].push(v);
    }
    let mut k_vr = vec![0.0; n];
    for s in members.iter().filter(|m| m.len() > 1) {
        let s_tot: f64 = s.iter().map(|&v| g.strength[v]).sum();
        for &v in s {
            let row = g.row(v);
            ext[v] = s.iter().filter(|&&u| u != v).map(|&u| row[u]).sum();
        }
        let well_connected = |ext_c: f64, s_c: f64| ext_c >= gamma * s_c * (s_tot - s_c) / g.two_m;
        let mut r: Vec<usize> = s.iter().copied().filter(|&v| well_connected(ext[v], g.strength[v])).collect();
        r.shuffle(rng);
        for v in r {
            if !singleton[v] {
                continue;
            }
            let sv = g.strength[v];
            let row = g.row(v);
            let mut cands: Vec<usize> = Vec::new();
            for &u in s {
                if u != v && row[u] != 0.0 {
                    let c = refined[u];
                    if k_vr[c] == 0.0 {
                        cands.push(c);
                    }
                    k_vr[c] += row[u];
                }
            }
            // v leaves its own singleton
            ref_tot[v] -= sv;
            let mut options: Vec<(usize, f64)> = vec![(v, 0.0)];
            for &c in &cands {
                if !well_connected(ext[c], ref_tot[c]) {
                    continue;
                }
                let gain = k_vr[c] - gamma * sv * ref_tot[c] / g.two_m;
                if gain >= 0.0 {
                    options.push((c, gain));
                }
            }
            let max_gain = options.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = options.iter().map(|o| ((o.1 - max_gain) / theta).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut target = options[options.len() - 1].0;
            for (o, wgt) in options.iter().zip(&weights) {
                if pick < *wgt {
                    target = o.0;
                    break;
                }
                pick -= wgt;
            }
            if target != v {
                ext[target] = ext[target] + ext[v] - 2.0 * k_vr[target];
                refined[v] = target;
                singleton[v] = false;
                singleton[target] = false;
                ref_tot[target] += sv;
            } else {
                ref_tot[v] += sv;
            }
            for &c in &cands {
                k_vr[c] = 0.0;
            }
        }
    }
    refined
}

/// One multi-level Leiden pass starting from `initial` (one id per node).
fn leiden_pass(weights: &[f64], n: usize, initial: &[usize], cfg: &LeidenConfig, rng: &mut SeedRng) -> Vec<usize> {
    let mut g = Graph::from_dense(n, weights.to_vec());
    let mut comm = initial.to_vec();
    relabel(&mut comm);
    let mut node_map: Vec<usize> = (0..n).collect();
    for _level in 0..64 {
        fast_move_nodes(&g, &mut comm, cfg.resolution, rng);
        let k = relabel(&mut comm);
        if k == g.n {
            break;
        }
        let mut refined = refine_partition(&g, &comm, k, cfg.resolution, cfg.theta, rng);
        let mut kr = relabel(&mut refined);
        if kr == g.n {
            // refinement merged nothing; aggregate on the moved partition
            refined = comm.clone();
            kr = k;
        }
        let agg = g.aggregate(&refined, kr);
        let mut next = vec![0usize; kr];
        for v in 0..g.n {
            next[refined[v]] = comm[v];
        }
        for o in node_map.iter_mut() {
            *o = refined[*o];
        }
        g = agg;
        comm = next;
    }
    let mut out: Vec<usize> = node_map.iter().map(|&a| comm[a]).collect();
    relabel(&mut out);
    out
}

/// Leiden partition of a symmetric non-negative weight matrix (row-major
/// `n × n`). Deterministic given `cfg.seed`.
pub fn leiden(weights: &[f64], n: usize, cfg: &LeidenConfig) -> Partition {
    assert_eq!(weights.len(), n * n);
    let two_m: f64 = weights.iter().sum();
    if n == 0 || !(two_m > 0.0) {
        return Partition::new((0..n).collect());
    }
    let mut rng = seed::rng(seed::named(cfg.seed, "leiden"));
    let mut best: Vec<usize> = (0..n).collect();
    let mut best_q = modularity_of(weights, n, &best, cfg.resolution);
    for _ in 0..cfg.max_iterations.max(1) {
        let cand = leiden_pass(weights, n, &best, cfg, &mut rng);
        let q = modularity_of(weights, n, &cand, cfg.resolution);
        if q > best_q + 1e-12 {
            best = cand;
            best_q = q;
        } else {
            break;
        }
    }
    Partition::new(best)
}
