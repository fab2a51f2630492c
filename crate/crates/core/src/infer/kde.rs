//! Weighted Gaussian KDE with the Improved Sheather-Jones bandwidth.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const GRID_SIZE: usize = 1 << 12;
/// Below this many distinct samples the plug-in estimate is unreliable.
pub const MIN_DISTINCT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMethod {
    Isj,
    Silverman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub h: f64,
    pub method: BandwidthMethod,
}

fn distinct(sorted: &[f64]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[1] != w[0]).count()
}

fn weighted_sd(x: &[f64], w: &[f64]) -> f64 {
    let m: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    x.iter().zip(w).map(|(a, b)| b * (a - m).powi(2)).sum::<f64>().sqrt()
}

/// `1.06 σ n^(-1/5)`; unit σ when the sample has no spread.
pub fn silverman(x: &[f64], w: &[f64], n: usize) -> f64 {
    let sd = weighted_sd(x, w);
    let sd = if sd > 0.0 { sd } else { 1.0 };
    1.06 * sd * (n.max(1) as f64).powf(-0.2)
}

/// DCT-II coefficients 1..n of `data` (coefficient 0 is not needed).
fn dct_tail(data: &[f64]) -> Vec<f64> {
    let n = data.len();
    let period = 4 * n;
    let table: Vec<f64> = (0..period).map(|i| (PI * i as f64 / (2 * n) as f64).cos()).collect();
    (1..n)
        .map(|k| {
            let mut acc = 0.0;
            let mut idx = k; // k (2j + 1) mod 4n
            let stride = (2 * k) % period;
            for &d in data {
                acc += d * table[idx];
                idx += stride;
                if idx >= period {
                    idx -= period;
                }
            }
            acc
        })
        .collect()
}

fn fixed_point(t: f64, n: f64, i_sq: &[f64], a2: &[f64]) -> f64 {
    let l = 7;
    let functional = |s: i32, time: f64| -> f64 {
        2.0 * PI.powi(2 * s) * i_sq.iter().zip(a2).map(|(i, a)| i.powi(s) * a * (-i * PI * PI * time).exp()).sum::<f64>()
    };
    let mut f = functional(l, t);
    for s in (2..l).rev() {
        let k0 = (1..2 * s).step_by(2).map(|v| v as f64).product::<f64>() / (2.0 * PI).sqrt();
        let c = (1.0 + 0.5f64.powf(s as f64 + 0.5)) / 3.0;
        let time = (2.0 * c * k0 / n / f).powf(2.0 / (3.0 + 2.0 * s as f64));
        f = functional(s, time);
    }
    t - (2.0 * n * PI.sqrt() * f).powf(-0.4)
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut glo, ghi) = (g(lo), g(hi));
    if !(glo.is_finite() && ghi.is_finite()) || glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if !gm.is_finite() {
            return None;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// ISJ bandwidth of a weighted sample, falling back to Silverman's rule for
/// small samples or when the fixed point cannot be bracketed.
pub fn isj_bandwidth_weighted(samples: &[f64], weights: &[f64]) -> Result<Bandwidth> {
    if samples.is_empty() || samples.len() != weights.len() {
        return Err(Error::Validation("bandwidth needs a non-empty sample with matching weights".into()));
    }
    if samples.iter().chain(weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Validation("bandwidth sample must be finite with non-negative weights".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Validation("bandwidth weights sum to zero".into()));
    }
    let w: Vec<f64> = weights.iter().map(|v| v / total).collect();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n_distinct = distinct(&sorted);
    let fallback = |reason: &str| {
        log::warn!("ISJ bandwidth unavailable ({reason}); using Silverman's rule");
        Bandwidth { h: silverman(samples, &w, n_distinct), method: BandwidthMethod::Silverman }
    };
    if n_distinct < MIN_DISTINCT {
        return Ok(fallback("too few distinct samples"));
    }
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let range = hi - lo;
    let (min, max) = (lo - range / 2.0, hi + range / 2.0);
    let span = max - min;
    let dx = span / (GRID_SIZE - 1) as f64;
    let mut hist = vec![0.0; GRID_SIZE];
    for (x, wi) in samples.iter().zip(&w) {
        let bin = (((x - min) / dx) as usize).min(GRID_SIZE - 1);
        hist[bin] += wi;
    }
    let a2: Vec<f64> = dct_tail(&hist).into_iter().map(|a| a * a).collect();
    let i_sq: Vec<f64> = (1..GRID_SIZE).map(|i| (i * i) as f64).collect();
    let n = n_distinct as f64;
    let g = |t: f64| fixed_point(t, n, &i_sq, &a2);
    let n_clamped = n.clamp(50.0, 1050.0);
    let mut tol = 1e-12 + 0.01 * (n_clamped - 50.0) / 1000.0;
    loop {
        if let Some(t) = bisect(g, 0.0, tol) {
            if t > 0.0 {
                return Ok(Bandwidth { h: t.sqrt() * span, method: BandwidthMethod::Isj });
            }
        }
        if tol >= 0.1 {
            return Ok(fallback("fixed point not bracketed"));
        }
        tol = (tol * 2.0).min(0.1);
    }
}

pub fn isj_bandwidth(samples: &[f64]) -> Result<Bandwidth> {
    isj_bandwidth_weighted(samples, &vec![1.0; samples.len()])
}

/// Weighted Gaussian kernel density with the normalized standard kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    /// Sorted sample points.
    points: Vec<f64>,
    /// Weights aligned with `points`, summing to 1.
    weights: Vec<f64>,
    pub bandwidth: Bandwidth,
}

impl KdeModel {
    /// Fit on weighted points. Zero-weight points are dropped; input order
    /// does not affect the result.
    pub fn fit(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::Validation("points and weights differ in length".into()));
        }
        let mut pairs: Vec<(f64, f64)> =
            points.iter().copied().zip(weights.iter().copied()).filter(|p| p.1 > 0.0).collect();
        if pairs.is_empty() {
            return Err(Error::Validation("KDE needs positive total weight".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (points, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let bandwidth = isj_bandwidth_weighted(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        Ok(Self { points, weights: weights.iter().map(|w| w / total).collect(), bandwidth })
    }

    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.bandwidth = Bandwidth { h, method: self.bandwidth.method };
        self
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth.h;
        let norm = 1.0 / ((2.0 * PI).sqrt() * h);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let z = (x - p) / h;
                w * (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }
}
