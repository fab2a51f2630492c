//! Trade ingestion: export tables, revealed comparative advantage and the
//! binary specialization matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use log::warn;
use nalgebra::DMatrix;

use crate::io::write_matrix_csv;
use crate::{Error, Result};

/// Country × product export values for one year. Rows and columns are in
/// lexicographic code order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportTable {
    pub year: i32,
    countries: Vec<String>,
    products: Vec<String>,
    values: DMatrix<f64>,
}

fn index_map(codes: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(codes.len());
    for (i, c) in codes.iter().enumerate() {
        if map.insert(c.clone(), i).is_some() {
            return Err(Error::Validation(format!("duplicate {what} code {c:?}")));
        }
    }
    Ok(map)
}

impl ExportTable {
    pub fn new(
        year: i32,
        countries: Vec<String>,
        products: Vec<String>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if values.nrows() != countries.len() || values.ncols() != products.len() {
            return Err(Error::Validation(format!(
                "matrix is {}x{} but there are {} countries and {} products",
                values.nrows(),
                values.ncols(),
                countries.len(),
                products.len()
            )));
        }
        index_map(&countries, "country")?;
        index_map(&products, "product")?;
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!("export value {v} is not a non-negative number")));
        }
        Ok(Self { year, countries, products, values })
    }

    pub fn empty(year: i32) -> Self {
        Self { year, countries: vec![], products: vec![], values: DMatrix::zeros(0, 0) }
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty() || self.products.is_empty()
    }

    pub fn value(&self, country: &str, product: &str) -> Option<f64> {
        let c = self.countries.iter().position(|x| x == country)?;
        let p = self.products.iter().position(|x| x == product)?;
        Some(self.values[(c, p)])
    }

    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.iter().position(|x| x == code)
    }

    /// Export row of one country.
    pub fn row(&self, country: usize) -> Vec<f64> {
        self.values.row(country).iter().copied().collect()
    }

    /// Drop products whose world exports are zero. Returns the reduced table
    /// and the dropped product codes.
    pub fn drop_zero_products(&self) -> (ExportTable, Vec<String>) {
        let mut keep = Vec::new();
        let mut dropped = Vec::new();
        for (j, code) in self.products.iter().enumerate() {
            if self.values.column(j).sum() > 0.0 {
                keep.push(j);
            } else {
                dropped.push(code.clone());
            }
        }
        let values = self.values.select_columns(&keep);
        let products = keep.iter().map(|&j| self.products[j].clone()).collect();
        (
            ExportTable { year: self.year, countries: self.countries.clone(), products, values },
            dropped,
        )
    }

    /// Write as a labelled matrix CSV (countries as rows).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_matrix_csv(w, &self.countries, &self.products, &self.values)
    }

    /// Read back a table written by [`ExportTable::write_csv`].
    pub fn read_csv<R: Read>(r: R, year: i32) -> Result<Self> {
        let m = crate::io::read_matrix_csv(r)?;
        Self::new(year, m.row_codes, m.col_codes, m.values)
    }
}

/// Column names accepted for each field of the long-format trade CSV. The
/// second spelling is the raw BACI header.
const YEAR_COLS: [&str; 2] = ["year", "t"];
const EXPORTER_COLS: [&str; 2] = ["exporter", "i"];
const IMPORTER_COLS: [&str; 2] = ["importer", "j"];
const PRODUCT_COLS: [&str; 2] = ["product", "k"];
const VALUE_COLS: [&str; 2] = ["value", "v"];

fn find_col(header: &csv::StringRecord, names: &[&str]) -> Result<usize> {
    header
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        .ok_or_else(|| Error::Parse { line: 1, message: format!("missing column {:?}", names[0]) })
}

/// Parse long-format bilateral flows (`year,exporter,importer,product,value`)
/// and sum over importers. Rows for other years are ignored.
pub fn parse_trade_csv<R: Read>(stream: R, year: i32) -> Result<ExportTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(stream);
    let header = match rdr.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => return Ok(ExportTable::empty(year)),
        Err(e) => return Err(e.into()),
    };
    let cy = find_col(&header, &YEAR_COLS)?;
    let ce = find_col(&header, &EXPORTER_COLS)?;
    // importer is not needed for the aggregation, but its presence is part of the format
    find_col(&header, &IMPORTER_COLS)?;
    let cp = find_col(&header, &PRODUCT_COLS)?;
    let cv = find_col(&header, &VALUE_COLS)?;

    let mut flows: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut countries = BTreeSet::new();
    let mut products = BTreeSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { line, message: e.to_string() }
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Parse { line, message: format!("missing field {i}") })
        };
        let row_year: i32 = field(cy)?
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad year {:?}", record.get(cy)) })?;
        if row_year != year {
            continue;
        }
        let value: f64 = field(cv)?
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad value {:?}", record.get(cv)) })?;
        if !value.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite value {value}") });
        }
        if value < 0.0 {
            return Err(Error::Validation(format!("negative export value {value} at line {line}")));
        }
        let exporter = field(ce)?.to_string();
        let product = field(cp)?.to_string();
        if exporter.is_empty() || product.is_empty() {
            return Err(Error::Parse { line, message: "empty exporter or product code".into() });
        }
        countries.insert(exporter.clone());
        products.insert(product.clone());
        *flows.entry((exporter, product)).or_insert(0.0) += value;
    }

    let countries: Vec<String> = countries.into_iter().collect();
    let products: Vec<String> = products.into_iter().collect();
    let ci: HashMap<&str, usize> = countries.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let pi: HashMap<&str, usize> = products.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut values = DMatrix::zeros(countries.len(), products.len());
    for ((c, p), v) in &flows {
        values[(ci[c.as_str()], pi[p.as_str()])] = *v;
    }
    ExportTable::new(year, countries, products, values)
}

/// Revealed comparative advantage, indexed like the export table it came
/// from minus any products with zero world exports.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
    pub dropped_products: Vec<String>,
}

/// `RCA_cp = (x_cp / Σ_p x_cp) / (Σ_c x_cp / Σ_cp x_cp)`.
///
/// Countries with zero exports get all-zero rows; products with zero world
/// exports are dropped (and listed in `dropped_products`).
pub fn compute_rca(table: &ExportTable) -> Result<RcaMatrix> {
    let total: f64 = table.values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoTrade);
    }
    let (t, dropped) = table.drop_zero_products();
    if !dropped.is_empty() {
        warn!("dropping {} products with zero world exports", dropped.len());
    }
    let x = &t.values;
    let row_tot: Vec<f64> = x.row_iter().map(|r| r.sum()).collect();
    let world_share: Vec<f64> = x.column_iter().map(|c| c.sum() / total).collect();
    let values = DMatrix::from_fn(x.nrows(), x.ncols(), |c, p| {
        if row_tot[c] > 0.0 {
            (x[(c, p)] / row_tot[c]) / world_share[p]
        } else {
            0.0
        }
    });
    Ok(RcaMatrix { countries: t.countries, products: t.products, values, dropped_products: dropped })
}

/// Binary specialization matrix `M` with its diversity (row sums) and
/// ubiquity (column sums).
#[derive(Debug, Clone, PartialEq)]
pub struct SpecializationMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    m: DMatrix<f64>,
    diversity: Vec<usize>,
    ubiquity: Vec<usize>,
}

impl SpecializationMatrix {
    /// Build from a 0/1 matrix. Entries other than 0 or 1 are rejected.
    pub fn new(countries: Vec<String>, products: Vec<String>, m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != countries.len() || m.ncols() != products.len() {
            return Err(Error::Validation("specialization matrix shape does not match codes".into()));
        }
        if m.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Validation("specialization matrix must be binary".into()));
        }
        let diversity = m.row_iter().map(|r| r.sum() as usize).collect();
        let ubiquity = m.column_iter().map(|c| c.sum() as usize).collect();
        Ok(Self { countries, products, m, diversity, ubiquity })
    }

    /// Build from row vectors with generated codes `c0..`, `p0..`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let nc = rows.len();
        let np = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != np) {
            return Err(Error::Validation("ragged rows".into()));
        }
        let m = DMatrix::from_fn(nc, np, |i, j| rows[i][j] as f64);
        Self::new(
            (0..nc).map(|i| format!("c{i}")).collect(),
            (0..np).map(|j| format!("p{j}")).collect(),
            m,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn diversity(&self) -> &[usize] {
        &self.diversity
    }

    pub fn ubiquity(&self) -> &[usize] {
        &self.ubiquity
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn is_pruned(&self) -> bool {
        self.diversity.iter().all(|&d| d > 0) && self.ubiquity.iter().all(|&u| u > 0)
    }

    /// Remove countries with zero diversity and products with zero ubiquity.
    pub fn prune(&self) -> SpecializationMatrix {
        let rows: Vec<usize> = (0..self.n_countries()).filter(|&c| self.diversity[c] > 0).collect();
        let cols: Vec<usize> = (0..self.n_products()).filter(|&p| self.ubiquity[p] > 0).collect();
        let m = self.m.select_rows(&rows).select_columns(&cols);
        SpecializationMatrix::new(
            rows.iter().map(|&i| self.countries[i].clone()).collect(),
            cols.iter().map(|&j| self.products[j].clone()).collect(),
            m,
        )
        .expect("sub-matrix of a valid matrix")
    }

    pub fn ones(&self) -> usize {
        self.diversity.iter().sum()
    }
}

/// `M_cp = 1` iff `RCA_cp > threshold` (strict).
pub fn binarize(rca: &RcaMatrix, threshold: f64) -> Result<SpecializationMatrix> {
    if !(threshold > 0.0) {
        return Err(Error::Validation(format!("RCA threshold must be positive, got {threshold}")));
    }
    let m = rca.values.map(|v| if v > threshold { 1.0 } else { 0.0 });
    SpecializationMatrix::new(rca.countries.clone(), rca.products.clone(), m)
}
