//! Development indicators (World Development Indicators style long CSV).

use std::collections::BTreeMap;
use std::io::Read;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::trade::ExportTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Indicator {
    /// GDP per capita, constant 2015 USD (level; logs taken on read).
    GdpPerCapita,
    /// Population in millions.
    Population,
    /// Gross capital formation, % of GDP.
    InvestmentGdp,
    /// Exports of goods and services, % of GDP.
    ExportGdp,
    /// GDP per capita growth, % per year.
    GdpPcGrowth,
}

impl Indicator {
    /// Map an indicator name (short name or WDI series code) to the indicator
    /// and the factor applied to raw values.
    fn lookup(name: &str) -> Option<(Indicator, f64)> {
        Some(match name.trim() {
            "gdp_pc" | "NY.GDP.PCAP.KD" => (Indicator::GdpPerCapita, 1.0),
            "population" => (Indicator::Population, 1.0),
            "SP.POP.TOTL" => (Indicator::Population, 1e-6),
            "investment_gdp" | "NE.GDI.TOTL.ZS" => (Indicator::InvestmentGdp, 1.0),
            "export_gdp" | "NE.EXP.GNFS.ZS" => (Indicator::ExportGdp, 1.0),
            "gdp_pc_growth" | "NY.GDP.PCAP.KD.ZG" => (Indicator::GdpPcGrowth, 1.0),
            _ => return None,
        })
    }
}

/// Per-country indicator series; `None` marks an explicitly missing value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryRecord {
    pub series: BTreeMap<Indicator, BTreeMap<i32, Option<f64>>>,
    pub joinable: bool,
}

/// A complete regression observation for one country.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub log_gdp_pc: f64,
    pub population: f64,
    pub investment_gdp: f64,
    pub export_gdp: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndicatorTable {
    pub records: BTreeMap<String, CountryRecord>,
    /// Rows skipped because the indicator name was not recognised.
    pub skipped_unknown: usize,
}

fn is_missing(s: &str) -> bool {
    matches!(s.trim(), "" | ".." | "NA" | "NaN" | "nan")
}

/// Parse `country,indicator,year,value` rows.
pub fn parse_indicators_csv<R: Read>(stream: R) -> Result<IndicatorTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(stream);
    let mut table = IndicatorTable::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() < 4 {
            return Err(Error::Parse { line, message: "expected country,indicator,year,value".into() });
        }
        let Some((ind, scale)) = Indicator::lookup(&rec[1]) else {
            table.skipped_unknown += 1;
            continue;
        };
        let year: i32 = rec[2]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad year {:?}", &rec[2]) })?;
        let value = if is_missing(&rec[3]) {
            None
        } else {
            let v: f64 = rec[3]
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("bad value {:?}", &rec[3]) })?;
            Some(v * scale)
        };
        table
            .records
            .entry(rec[0].to_string())
            .or_default()
            .series
            .entry(ind)
            .or_default()
            .insert(year, value);
    }
    if table.skipped_unknown > 0 {
        warn!("skipped {} indicator rows with unknown names", table.skipped_unknown);
    }
    Ok(table)
}

impl IndicatorTable {
    pub fn value(&self, country: &str, ind: Indicator, year: i32) -> Option<f64> {
        self.records.get(country)?.series.get(&ind)?.get(&year).copied().flatten()
    }

    pub fn log_gdp_per_capita(&self, country: &str, year: i32) -> Option<f64> {
        self.value(country, Indicator::GdpPerCapita, year).filter(|v| *v > 0.0).map(f64::ln)
    }

    /// Mean growth over `base_year+1 ..= base_year+window`. `None` if any year
    /// in the window is missing.
    pub fn growth_average(&self, country: &str, base_year: i32, window: i32) -> Option<f64> {
        if window < 1 {
            return None;
        }
        let mut sum = 0.0;
        for y in base_year + 1..=base_year + window {
            sum += self.value(country, Indicator::GdpPcGrowth, y)?;
        }
        Some(sum / window as f64)
    }

    /// Mark which countries also appear in the export table.
    pub fn join(&mut self, exports: &ExportTable) {
        for (code, rec) in self.records.iter_mut() {
            rec.joinable = exports.country_index(code).is_some();
        }
    }

    pub fn unjoinable(&self) -> Vec<&str> {
        self.records.iter().filter(|(_, r)| !r.joinable).map(|(c, _)| c.as_str()).collect()
    }

    /// Complete observation at `year` with growth averaged over the following
    /// `window` years; `None` when anything is missing.
    pub fn observation(&self, country: &str, year: i32, window: i32) -> Option<Observation> {
        Some(Observation {
            log_gdp_pc: self.log_gdp_per_capita(country, year)?,
            population: self.value(country, Indicator::Population, year)?,
            investment_gdp: self.value(country, Indicator::InvestmentGdp, year)?,
            export_gdp: self.value(country, Indicator::ExportGdp, year)?,
            growth: self.growth_average(country, year, window)?,
        })
    }
}
