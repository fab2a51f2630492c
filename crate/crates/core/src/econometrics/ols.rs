use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{stars, DesignMatrix, TidyRow};
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    /// Predictor names followed by `const`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub hc1_se: Vec<f64>,
    pub classical_se: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Gaussian-likelihood AIC; `-inf` for an exact fit.
    pub aic: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
}

impl OlsResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.p_values[i])
    }

    pub fn tidy(&self, model: &str) -> Vec<TidyRow> {
        (0..self.names.len())
            .map(|i| TidyRow {
                model: model.to_string(),
                term: self.names[i].clone(),
                estimate: self.coefficients[i],
                std_error: self.hc1_se[i],
                p_value: self.p_values[i],
                stars: stars(self.p_values[i]).to_string(),
            })
            .collect()
    }
}

/// Names of columns that are linear combinations of earlier ones.
pub fn collinear_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&v);
                v -= b * d;
            }
        }
        let rest = v.norm();
        if norm == 0.0 || rest <= RANK_TOL * norm {
            bad.push(names[j].clone());
        } else {
            basis.push(v / rest);
        }
    }
    bad
}

/// `(XᵀX)⁻¹` from the R factor of a thin QR.
fn xtx_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = x.clone().qr().r();
    let r_inv = r.try_inverse().ok_or_else(|| Error::Numerical("singular R factor".into()))?;
    Ok(&r_inv * r_inv.transpose())
}

/// OLS with an intercept and HC1 heteroskedasticity-robust errors.
pub fn ols_hc1(design: &DesignMatrix) -> Result<OlsResult> {
    let x = design.with_intercept();
    let mut names = design.names.clone();
    names.push("const".into());
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::Validation(format!("{n} observations are too few for {k} parameters")));
    }
    let bad = collinear_columns(&x, &names);
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad));
    }
    let y = &design.y;
    let xtx_inv = xtx_inverse(&x)?;
    let beta = &xtx_inv * (x.transpose() * y);
    let resid = y - &x * &beta;
    let ssr = resid.norm_squared();
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let df = (n - k) as f64;

    let mut meat = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let row = x.row(i).transpose();
        meat += &row * row.transpose() * resid[i].powi(2);
    }
    let hc1 = &xtx_inv * meat * &xtx_inv * (n as f64 / df);
    let hc1_se: Vec<f64> = (0..k).map(|i| hc1[(i, i)].max(0.0).sqrt()).collect();
    let s2 = ssr / df;
    let classical_se: Vec<f64> = (0..k).map(|i| (s2 * xtx_inv[(i, i)]).max(0.0).sqrt()).collect();

    let t_dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
    let t_values: Vec<f64> = (0..k)
        .map(|i| match (beta[i], hc1_se[i]) {
            (b, se) if se > 0.0 => b / se,
            (b, _) if b == 0.0 => 0.0,
            (b, _) => b.signum() * f64::INFINITY,
        })
        .collect();
    let p_values = t_values.iter().map(|t| 2.0 * (1.0 - t_dist.cdf(t.abs()))).collect();

    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let nf = n as f64;
    let llf = -nf / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0);
    Ok(OlsResult {
        names,
        coefficients: beta.iter().copied().collect(),
        hc1_se,
        classical_se,
        t_values,
        p_values,
        r_squared,
        adj_r_squared: 1.0 - (1.0 - r_squared) * (nf - 1.0) / df,
        aic: 2.0 * k as f64 - 2.0 * llf,
        n,
        residuals: resid.iter().copied().collect(),
    })
}

/// Variance inflation factor of every predictor, each regressed on the
/// others with an intercept. Perfectly collinear columns get `+inf`.
pub fn vif(design: &DesignMatrix) -> Result<Vec<f64>> {
    let p = design.names.len();
    if p < 2 {
        return Err(Error::Validation("VIF needs at least two predictors".into()));
    }
    (0..p)
        .map(|j| {
            let mut others: Vec<usize> = (0..p).filter(|&c| c != j).collect();
            // regress on a basis of the other columns
            let sub_names: Vec<String> = others.iter().map(|&c| design.names[c].clone()).collect();
            let redundant = collinear_columns(&design.x.select_columns(&others), &sub_names);
            others.retain(|&c| !redundant.contains(&design.names[c]));
            let sub = DesignMatrix {
                ids: design.ids.clone(),
                names: others.iter().map(|&c| design.names[c].clone()).collect(),
                x: design.x.select_columns(&others),
                y: design.x.column(j).into_owned(),
            };
            match ols_hc1(&sub) {
                Ok(fit) if fit.r_squared < 1.0 - 1e-12 => Ok(1.0 / (1.0 - fit.r_squared)),
                Ok(_) | Err(Error::RankDeficient(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}
