//! Regression tooling for the growth analyses: OLS with HC1 errors, VIF,
//! proportional-odds logit and the fixed specification harness.

mod logit;
mod ols;

pub use logit::{ordered_logit, OrderedLogitResult};
pub use ols::{collinear_columns, ols_hc1, vif, OlsResult};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rows are observations, columns are named predictors. No intercept column;
/// `ols_hc1` appends one.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl DesignMatrix {
    pub fn new(ids: Vec<String>, names: Vec<String>, columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if ids.len() != n {
            return Err(Error::Validation(format!("{} ids for {n} observations", ids.len())));
        }
        if names.len() != columns.len() {
            return Err(Error::Validation(format!("{} names for {} columns", names.len(), columns.len())));
        }
        if let Some((name, col)) = names.iter().zip(&columns).find(|(_, c)| c.len() != n) {
            return Err(Error::Validation(format!("column {name} has {} values, expected {n}", col.len())));
        }
        let finite = |v: &f64| v.is_finite();
        if let Some((name, _)) = names.iter().zip(&columns).find(|(_, c)| !c.iter().all(finite)) {
            return Err(Error::Validation(format!("column {name} has missing or non-finite values")));
        }
        if !y.iter().all(|v| !v.is_nan()) {
            return Err(Error::Validation("response has missing values".into()));
        }
        let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
        Ok(Self { ids, names, x, y: DVector::from_vec(y) })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Predictors with a trailing column of ones.
    pub fn with_intercept(&self) -> DMatrix<f64> {
        self.x.clone().insert_column(self.x.ncols(), 1.0)
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// One line of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub model: String,
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub stars: String,
}

/// Country-level inputs. Optional fields are absent when a stage did not run
/// for that country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub country: String,
    pub growth: f64,
    pub log_gdp_pc: f64,
    pub population: f64,
    pub investment_gdp: f64,
    pub export_gdp: f64,
    pub eci: f64,
    pub k1: Option<f64>,
    pub rho: Option<f64>,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrowthSpec {
    /// ECI and log GDP per capita.
    EciBase,
    /// ECI with investment and export shares.
    EciFull,
    /// Average capability complexity and log GDP per capita.
    CapabilityBase,
    /// Average capability complexity with investment, population and exports.
    CapabilityFull,
}

impl GrowthSpec {
    pub const ALL: [GrowthSpec; 4] =
        [GrowthSpec::EciBase, GrowthSpec::EciFull, GrowthSpec::CapabilityBase, GrowthSpec::CapabilityFull];

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id).checked_sub(1)?).copied()
    }

    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|&s| s == self).unwrap() as u8 + 1
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            GrowthSpec::EciBase => &["eci", "log_gdp_pc"],
            GrowthSpec::EciFull => &["eci", "log_gdp_pc", "investment_gdp", "export_gdp"],
            GrowthSpec::CapabilityBase => &["k1", "log_gdp_pc"],
            GrowthSpec::CapabilityFull => &["k1", "log_gdp_pc", "investment_gdp", "population", "export_gdp"],
        }
    }
}

fn column_value(row: &PanelRow, name: &str) -> Option<f64> {
    let v = match name {
        "eci" => row.eci,
        "k1" => row.k1?,
        "log_gdp_pc" => row.log_gdp_pc,
        "population" => row.population,
        "investment_gdp" => row.investment_gdp,
        "export_gdp" => row.export_gdp,
        _ => return None,
    };
    v.is_finite().then_some(v)
}

/// Design for one growth specification; incomplete rows are dropped.
pub fn growth_design(rows: &[PanelRow], spec: GrowthSpec) -> Result<DesignMatrix> {
    let cols = spec.columns();
    let mut ids = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    let mut y = Vec::new();
    for row in rows {
        let Some(vals) = cols.iter().map(|c| column_value(row, c)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        if !row.growth.is_finite() {
            continue;
        }
        ids.push(row.country.clone());
        for (dst, v) in values.iter_mut().zip(vals) {
            dst.push(v);
        }
        y.push(row.growth);
    }
    DesignMatrix::new(ids, cols.iter().map(|s| s.to_string()).collect(), values, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub spec: GrowthSpec,
    pub model: OlsResult,
    /// Variance inflation per predictor, in column order.
    pub vif: Vec<f64>,
}

pub fn growth_regression(rows: &[PanelRow], spec: GrowthSpec) -> Result<GrowthReport> {
    let design = growth_design(rows, spec)?;
    let model = ols_hc1(&design)?;
    let vif = if design.names.len() >= 2 { vif(&design)? } else { vec![1.0] };
    Ok(GrowthReport { spec, model, vif })
}

/// All four specifications; specs that fail are returned as errors in place.
pub fn growth_regressions(rows: &[PanelRow]) -> Vec<Result<GrowthReport>> {
    GrowthSpec::ALL.par_iter().map(|&s| growth_regression(rows, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrdinalTarget {
    Rho,
    Nu,
}

pub const ORDINAL_COLUMNS: [&str; 7] =
    ["log_gdp_pc", "log_gdp_pc_sq", "population", "investment_gdp", "export_gdp", "eci", "eci_sq"];

/// Design for the ordinal model of the fitted ρ or ν: development controls,
/// the squared deviation of log GDP from its mean, ECI and ECI squared.
pub fn parameter_design(rows: &[PanelRow], target: OrdinalTarget) -> Result<DesignMatrix> {
    let complete: Vec<(&PanelRow, f64)> = rows
        .iter()
        .filter_map(|r| {
            let y = match target {
                OrdinalTarget::Rho => r.rho?,
                OrdinalTarget::Nu => r.nu?,
            };
            let ok = [r.log_gdp_pc, r.population, r.investment_gdp, r.export_gdp, r.eci].iter().all(|v| v.is_finite());
            (ok && !y.is_nan()).then_some((r, y))
        })
        .collect();
    let n = complete.len();
    let mean_gdp = complete.iter().map(|(r, _)| r.log_gdp_pc).sum::<f64>() / n.max(1) as f64;
    let mut columns = vec![Vec::with_capacity(n); ORDINAL_COLUMNS.len()];
    for (r, _) in &complete {
        let d = r.log_gdp_pc - mean_gdp;
        let row = [r.log_gdp_pc, d * d, r.population, r.investment_gdp, r.export_gdp, r.eci, r.eci * r.eci];
        for (c, v) in columns.iter_mut().zip(row) {
            c.push(v);
        }
    }
    DesignMatrix::new(
        complete.iter().map(|(r, _)| r.country.clone()).collect(),
        ORDINAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
        columns,
        complete.iter().map(|(_, y)| *y).collect(),
    )
}

pub fn parameter_logit(rows: &[PanelRow], target: OrdinalTarget) -> Result<OrderedLogitResult> {
    ordered_logit(&parameter_design(rows, target)?)
}
