//! ECI/PCI by the Method of Reflections and its eigenvector steady state.
//!
//! `M̃ = D⁻¹ M U⁻¹ Mᵀ` is row-stochastic and self-adjoint under the
//! `D`-weighted inner product, so all of its eigenvalues are real and lie in
//! `[0, 1]` with the all-ones vector at eigenvalue 1. The solver works on the
//! symmetric similarity transform `A = D^{-1/2} M U⁻¹ Mᵀ D^{-1/2}`, deflates the
//! known Perron vector `D^{1/2}·1` and runs block power iteration with a
//! Rayleigh-Ritz step on the complement.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{jacobi_eigen, orthonormalize};
use crate::stats::{pearson, zscore};
use crate::trade::SpecializationMatrix;
use crate::{Error, Result};

pub const EIGEN_TOL: f64 = 1e-12;
pub const EIGEN_MAX_ITER: usize = 10_000;
pub const DEGENERACY_TOL: f64 = 1e-9;
const BLOCK: usize = 4;

fn require_pruned(s: &SpecializationMatrix) -> Result<()> {
    if let Some(c) = s.diversity().iter().position(|&d| d == 0) {
        return Err(Error::NeedsPruning(format!("country {} has zero diversity", s.countries[c])));
    }
    if let Some(p) = s.ubiquity().iter().position(|&u| u == 0) {
        return Err(Error::NeedsPruning(format!("product {} has zero ubiquity", s.products[p])));
    }
    Ok(())
}

/// `M̃ = D⁻¹ M U⁻¹ Mᵀ` as a dense matrix.
pub fn m_tilde(s: &SpecializationMatrix) -> Result<DMatrix<f64>> {
    require_pruned(s)?;
    let m = s.matrix();
    let inv_u = DVector::from_iterator(s.n_products(), s.ubiquity().iter().map(|&u| 1.0 / u as f64));
    let mut mu = m.clone();
    for (j, mut col) in mu.column_iter_mut().enumerate() {
        col *= inv_u[j];
    }
    let mut out = mu * m.transpose();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row /= s.diversity()[i] as f64;
    }
    Ok(out)
}

/// `M̂ = U⁻¹ Mᵀ D⁻¹ M` as a dense matrix.
pub fn m_hat(s: &SpecializationMatrix) -> Result<DMatrix<f64>> {
    require_pruned(s)?;
    let m = s.matrix();
    let mut md = m.clone();
    for (i, mut row) in md.row_iter_mut().enumerate() {
        row /= s.diversity()[i] as f64;
    }
    let mut out = m.transpose() * md;
    for (j, mut row) in out.row_iter_mut().enumerate() {
        row /= s.ubiquity()[j] as f64;
    }
    Ok(out)
}

/// Country and product reflections after `iteration` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionState {
    pub iteration: usize,
    pub k_c: Vec<f64>,
    pub k_p: Vec<f64>,
}

/// `k_{c,N} = (1/k_{c,0}) Σ_p M_cp k_{p,N-1}` and
/// `k_{p,N} = (1/k_{p,0}) Σ_c M_cp k_{c,N-1}`.
pub fn method_of_reflections(s: &SpecializationMatrix, n_iter: usize) -> Result<ReflectionState> {
    require_pruned(s)?;
    let m = s.matrix();
    let d: Vec<f64> = s.diversity().iter().map(|&x| x as f64).collect();
    let u: Vec<f64> = s.ubiquity().iter().map(|&x| x as f64).collect();
    let mut kc = DVector::from_vec(d.clone());
    let mut kp = DVector::from_vec(u.clone());
    for _ in 0..n_iter {
        let mut next_c = m * &kp;
        let mut next_p = m.tr_mul(&kc);
        for (v, di) in next_c.iter_mut().zip(&d) {
            *v /= di;
        }
        for (v, ui) in next_p.iter_mut().zip(&u) {
            *v /= ui;
        }
        kc = next_c;
        kp = next_p;
    }
    Ok(ReflectionState { iteration: n_iter, k_c: kc.iter().copied().collect(), k_p: kp.iter().copied().collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignOrientation {
    /// ECI correlates non-negatively with diversity.
    DiversityPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub eci: Vec<f64>,
    pub pci: Vec<f64>,
    pub second_eigenvalue_c: f64,
    pub second_eigenvalue_p: f64,
    pub sign_orientation: SignOrientation,
    /// Second and third eigenvalues agree within 1e-9.
    pub degenerate: bool,
    pub iterations: usize,
    /// `‖M̃v − λv‖∞ / ‖v‖∞` of the unscaled country eigenvector.
    pub residual: f64,
    /// Unscaled second eigenvector of `M̃` (unit norm under `D^{1/2}`).
    #[serde(skip)]
    pub raw_eci: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Number of connected components of the country–product bipartite graph.
pub fn bipartite_components(s: &SpecializationMatrix) -> usize {
    let (nc, np) = (s.n_countries(), s.n_products());
    let mut parent: Vec<usize> = (0..nc + np).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let m = s.matrix();
    for c in 0..nc {
        for p in 0..np {
            if m[(c, p)] != 0.0 {
                let (a, b) = (find(&mut parent, c), find(&mut parent, nc + p));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    (0..nc + np).filter(|&x| find(&mut parent, x) == x).count()
}

/// Matrix-free application of `A = D^{-1/2} M U⁻¹ Mᵀ D^{-1/2}`.
struct SymOperator<'a> {
    m: &'a DMatrix<f64>,
    inv_sqrt_d: DVector<f64>,
    inv_u: DVector<f64>,
}

impl SymOperator<'_> {
    fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        let x = y.component_mul(&self.inv_sqrt_d);
        let t = self.m.tr_mul(&x).component_mul(&self.inv_u);
        (self.m * t).component_mul(&self.inv_sqrt_d)
    }
}

/// ECI and PCI from the second eigenvectors of `M̃` and `M̂`, standardized,
/// with ECI oriented to correlate non-negatively with diversity.
pub fn eci_pci(s: &SpecializationMatrix) -> Result<ComplexityResult> {
    require_pruned(s)?;
    let (nc, np) = (s.n_countries(), s.n_products());
    if nc < 2 || np < 2 {
        return Err(Error::Validation("ECI needs at least 2 countries and 2 products".into()));
    }
    let comps = bipartite_components(s);
    if comps > 1 {
        return Err(Error::Disconnected(comps));
    }
    let d: Vec<f64> = s.diversity().iter().map(|&x| x as f64).collect();
    let op = SymOperator {
        m: s.matrix(),
        inv_sqrt_d: DVector::from_iterator(nc, d.iter().map(|x| 1.0 / x.sqrt())),
        inv_u: DVector::from_iterator(np, s.ubiquity().iter().map(|&x| 1.0 / x as f64)),
    };
    let sqrt_d = DVector::from_iterator(nc, d.iter().map(|x| x.sqrt()));
    let perron = &sqrt_d / sqrt_d.norm();

    let b = BLOCK.min(nc - 1);
    let mut rng = crate::seed::rng(0x00EC_1EC1);
    let mut y = DMatrix::from_fn(nc, b, |_, _| rng.random::<f64>() - 0.5);
    orthonormalize(&mut y, std::slice::from_ref(&perron));

    let mut theta = vec![0.0; b];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut vec0 = y.column(0).clone_owned();
    for it in 1..=EIGEN_MAX_ITER {
        iterations = it;
        let mut ay = DMatrix::zeros(nc, b);
        for j in 0..b {
            ay.set_column(j, &op.apply(&y.column(j).clone_owned()));
        }
        let h = y.transpose() * &ay;
        let h = (&h + h.transpose()) * 0.5;
        let (vals, vecs) = jacobi_eigen(&h);
        theta = vals;
        y = &y * &vecs;
        ay = &ay * &vecs;
        vec0 = y.column(0).clone_owned();
        let r = ay.column(0) - &vec0 * theta[0];
        residual = r.norm() / theta[0].abs().max(1.0);
        if residual <= EIGEN_TOL {
            break;
        }
        y = ay;
        orthonormalize(&mut y, std::slice::from_ref(&perron));
    }
    let mut warnings = Vec::new();
    if residual > EIGEN_TOL {
        return Err(Error::Numerical(format!(
            "ECI eigen-solver did not converge after {EIGEN_MAX_ITER} iterations (residual {residual:.3e})"
        )));
    }
    let lambda2 = theta[0];
    let degenerate = b >= 2 && (theta[0] - theta[1]).abs() <= DEGENERACY_TOL;
    if degenerate {
        warnings.push(format!(
            "second eigenvalue {:.12} is degenerate (next {:.12}); ECI is one vector of the eigenspace",
            theta[0], theta[1]
        ));
    }
    if !(lambda2 > 0.0) {
        return Err(Error::Numerical(format!("second eigenvalue {lambda2} is not positive")));
    }

    // back to the eigenvector of M̃
    let raw: Vec<f64> = vec0.iter().zip(&sqrt_d).map(|(v, sd)| v / sd).collect();
    let mut eci = zscore(&raw)?;
    let mut sign = 1.0;
    match pearson(&eci, &d) {
        Ok(r) if r < 0.0 => sign = -1.0,
        Ok(_) => {}
        Err(_) => {
            // constant diversity: orient by the first non-negligible entry
            if let Some(v) = eci.iter().find(|v| v.abs() > 1e-12) {
                if *v < 0.0 {
                    sign = -1.0;
                }
            }
        }
    }
    if sign < 0.0 {
        eci.iter_mut().for_each(|v| *v = -*v);
    }
    let raw: Vec<f64> = raw.iter().map(|v| v * sign).collect();

    // M̂ (U⁻¹Mᵀv) = λ (U⁻¹Mᵀv): the product eigenvector is a positive image of v
    let m = s.matrix();
    let w: DVector<f64> = m.tr_mul(&DVector::from_vec(raw.clone())).component_mul(&op.inv_u);
    let dinv = DVector::from_iterator(nc, d.iter().map(|x| 1.0 / x));
    let mhat_w = m.tr_mul(&(m * &w).component_mul(&dinv)).component_mul(&op.inv_u);
    let lambda_p = w.dot(&mhat_w) / w.dot(&w);
    let pci = zscore(w.as_slice())?;

    let mtilde_res = {
        let v = DVector::from_vec(raw.clone());
        let t = m.tr_mul(&v).component_mul(&op.inv_u);
        let mv = (m * t).component_mul(&dinv);
        (mv - &v * lambda2).amax() / v.amax()
    };

    Ok(ComplexityResult {
        countries: s.countries.clone(),
        products: s.products.clone(),
        eci,
        pci,
        second_eigenvalue_c: lambda2,
        second_eigenvalue_p: lambda_p,
        sign_orientation: SignOrientation::DiversityPositive,
        degenerate,
        iterations,
        residual: mtilde_res,
        raw_eci: raw,
        warnings,
    })
}

/// Assign 1-based ranks by descending value (ties keep input order).
pub fn ranks_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut rank = vec![0; values.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}
