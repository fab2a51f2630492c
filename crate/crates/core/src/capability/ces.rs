//! CES production over per-capability densities and the implied export shares.

use serde::{Deserialize, Serialize};

use super::catalog::{Product, ProductCatalog};
use super::space::CapabilitySpace;
use crate::{Error, Result};

/// Substitution parameter. `NegInfinity` is the Leontief limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rho {
    Finite(f64),
    NegInfinity,
}

impl Rho {
    pub fn value(self) -> f64 {
        match self {
            Rho::Finite(r) => r,
            Rho::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn from_f64(r: f64) -> Self {
        if r == f64::NEG_INFINITY {
            Rho::NegInfinity
        } else {
            Rho::Finite(r)
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Rho::Finite(r) if !(r <= 1.0) => Err(Error::Validation(format!("rho must be at most 1, got {r}"))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Rho {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rho::Finite(r) => write!(f, "{r}"),
            Rho::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// `ln` of the power mean `((1/K) Σ φ_i^ρ)^(1/ρ)`, accurate for small `|ρ|`.
fn log_power_mean(inputs: &[f64], rho: Rho) -> f64 {
    let k = inputs.len() as f64;
    match rho {
        Rho::NegInfinity => inputs.iter().copied().fold(f64::INFINITY, f64::min).ln(),
        _ if inputs.iter().any(|&x| x == 0.0) && rho.value() <= 0.0 => f64::NEG_INFINITY,
        Rho::Finite(r) if r == 0.0 => inputs.iter().map(|x| x.ln()).sum::<f64>() / k,
        Rho::Finite(r) => {
            let logs: Vec<f64> = inputs.iter().map(|x| x.ln()).collect();
            let m = if r > 0.0 {
                logs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            } else {
                logs.iter().copied().fold(f64::INFINITY, f64::min)
            };
            if m == f64::NEG_INFINITY {
                return m;
            }
            // mean of exp(r (ln x − m)) − 1, kept in expm1 form for precision
            let shifted: f64 = logs.iter().map(|l| (r * (l - m)).exp_m1()).sum::<f64>() / k;
            m + shifted.ln_1p() / r
        }
    }
}

/// `Q = α ((1/K) Σ φ_i^ρ)^(ν/ρ)` with the geometric mean at `ρ = 0` and the
/// minimum at `ρ = −∞`. A zero input with `ρ ≤ 0` gives `Q = 0`.
pub fn ces_aggregate(inputs: &[f64], rho: Rho, nu: f64, alpha: f64) -> Result<f64> {
    rho.validate()?;
    if inputs.is_empty() {
        return Err(Error::Validation("CES needs at least one input".into()));
    }
    if !(nu > 0.0) {
        return Err(Error::Validation(format!("returns to scale must be positive, got {nu}")));
    }
    if inputs.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Validation("CES inputs must be non-negative".into()));
    }
    Ok(alpha * (nu * log_power_mean(inputs, rho)).exp())
}

/// Mean proximity from the country set to every capability.
pub fn country_densities(space: &CapabilitySpace, country: &[usize]) -> Result<Vec<f64>> {
    if country.is_empty() {
        return Err(Error::Validation("country capability set is empty".into()));
    }
    let phi = space.phi();
    let n = space.n_capabilities();
    let mut d = vec![0.0; n];
    for &a in country {
        for (j, x) in d.iter_mut().enumerate() {
            *x += phi[(a, j)];
        }
    }
    let k = country.len() as f64;
    d.iter_mut().for_each(|x| *x /= k);
    Ok(d)
}

pub fn ces_output(space: &CapabilitySpace, country: &[usize], product: &Product, rho: Rho, nu: f64, alpha: f64) -> Result<f64> {
    let d = country_densities(space, country)?;
    let inputs: Vec<f64> = product.capabilities.iter().map(|&a| d[a]).collect();
    ces_aggregate(&inputs, rho, nu, alpha)
}

/// Export shares from precomputed densities. `α` cancels, so it is omitted.
pub fn shares_from_densities(densities: &[f64], catalog: &ProductCatalog, rho: Rho, nu: f64) -> Result<Vec<f64>> {
    rho.validate()?;
    if !(nu > 0.0) {
        return Err(Error::Validation(format!("returns to scale must be positive, got {nu}")));
    }
    let fast = matches!(rho, Rho::Finite(r) if r.abs() >= 1e-3);
    // per-capability transform reused by every product
    let transformed: Vec<f64> = match rho {
        Rho::Finite(r) if fast => densities.iter().map(|&x| x.powf(r)).collect(),
        _ => vec![],
    };
    let mut buf = Vec::new();
    let log_q: Vec<f64> = catalog
        .products
        .iter()
        .map(|p| {
            let lpm = match rho {
                Rho::Finite(r) if fast => {
                    let m = p.capabilities.iter().map(|&a| transformed[a]).sum::<f64>() / p.k0 as f64;
                    if r < 0.0 && m == f64::INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        m.ln() / r
                    }
                }
                _ => {
                    buf.clear();
                    buf.extend(p.capabilities.iter().map(|&a| densities[a]));
                    log_power_mean(&buf, rho)
                }
            };
            nu * lpm
        })
        .collect();
    let top = log_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(Error::Numerical("country disconnected from capability space".into()));
    }
    let mut q: Vec<f64> = log_q.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= total);
    Ok(q)
}

/// `R(c, p) = Q(c, p) / Σ_p Q(c, p)` over the catalog.
pub fn export_shares(space: &CapabilitySpace, country: &[usize], catalog: &ProductCatalog, rho: Rho, nu: f64) -> Result<Vec<f64>> {
    shares_from_densities(&country_densities(space, country)?, catalog, rho, nu)
}
