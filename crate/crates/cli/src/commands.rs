//! One function per subcommand. Each opens the output directory, reads the
//! files it needs (hashing them), writes its outputs atomically and appends
//! a record to the manifest.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use capspace_core::calibrate::{calibrate_block_params, CalibrationConfig, CalibrationResult};
use capspace_core::capability::{
    select_n_by_aic, gmm_ks_test, simulate, BlockParams, CapabilitySpace, GmmFit, ModeKind, ModelConfig,
    ProductCatalog, Rho,
};
use capspace_core::complexity::{eci_pci, ranks_descending};
use capspace_core::econometrics::{
    growth_regression, parameter_logit, GrowthSpec, OlsResult, OrderedLogitResult, OrdinalTarget, PanelRow, TidyRow,
};
use capspace_core::indicators::parse_indicators_csv;
use capspace_core::infer::{optimize_rho_nu, target_vector, AnnealSchedule, InferenceConfig, InferenceResult, Problem, Acceptance};
use capspace_core::io::{read_cache, read_matrix_csv, write_cache, write_matrix_csv};
use capspace_core::product_space::{eigenvector_centrality, network_report, proximity_matrix, ProximityNetwork};
use capspace_core::stats::{mean, std_pop};
use capspace_core::trade::{binarize, compute_rca, parse_trade_csv, ExportTable, SpecializationMatrix};
use capspace_core::Error;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::workspace::Workspace;
use crate::{
    plot, CalibrateArgs, Command, ComplexityArgs, GmmArgs, InferArgs, IngestArgs, ModeArg, ModelArgs, OutArgs,
    RegressArgs, SeededArgs, SimulateArgs,
};

const EXPORTS: &str = "exports.csv";
const SPECIALIZATION: &str = "specialization.csv";
const ECI: &str = "eci.csv";
const PCI: &str = "pci.csv";
const PROXIMITY: &str = "proximity.cspc";
const GMM: &str = "gmm.json";
const CALIBRATION: &str = "calibration.json";
const CATALOG: &str = "catalog.json";
const SPACE: &str = "space.csv";
const INFERENCE: &str = "inference.csv";

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Ingest(a) => ingest(&a),
        Command::Complexity(a) => complexity(&a),
        Command::ProductSpace(a) => product_space(&a),
        Command::Gmm(a) => gmm(&a),
        Command::Calibrate(a) => calibrate(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Infer(a) => infer(&a),
        Command::Regress(a) => regress(&a),
        Command::Report(a) => report(&a),
    }
}

fn open<T: Serialize>(out: &Path, stage: &'static str, args: &T) -> CliResult<Workspace> {
    let config = serde_json::to_value(args).map_err(Error::Json)?;
    Workspace::open(out, stage, config)
}

fn in_file(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |source| CliError::InFile { path: path.to_path_buf(), source }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> capspace_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    year: i32,
    countries: usize,
    products: usize,
    dropped_products: Vec<String>,
    specialized_pairs: usize,
    countries_without_specialization: usize,
    indicator_countries: Option<usize>,
    unjoinable_indicator_countries: Vec<String>,
}

/// Trade CSV to exports.csv and specialization.csv.
fn ingest_into(ws: &mut Workspace, input: &Path, year: i32, threshold: f64, indicators: Option<&Path>) -> CliResult<()> {
    let bytes = ws.read_input(input)?;
    let table = parse_trade_csv(&bytes[..], year).map_err(in_file(input))?;
    let rca = compute_rca(&table).map_err(in_file(input))?;
    let m = binarize(&rca, threshold)?;
    ws.write(EXPORTS, &csv_bytes(|b| table.write_csv(b))?)?;
    ws.write(SPECIALIZATION, &csv_bytes(|b| write_matrix_csv(b, &m.countries, &m.products, m.matrix()))?)?;
    let (mut indicator_countries, mut unjoinable) = (None, Vec::new());
    if let Some(path) = indicators {
        let bytes = ws.read_input(path)?;
        let mut ind = parse_indicators_csv(&bytes[..]).map_err(in_file(path))?;
        ind.join(&table);
        indicator_countries = Some(ind.records.len());
        unjoinable = ind.unjoinable().into_iter().map(str::to_string).collect();
        if !unjoinable.is_empty() {
            warn!("{} indicator countries have no trade rows", unjoinable.len());
        }
    }
    let summary = IngestSummary {
        year,
        countries: m.n_countries(),
        products: m.n_products(),
        dropped_products: rca.dropped_products.clone(),
        specialized_pairs: m.ones(),
        countries_without_specialization: m.diversity().iter().filter(|&&d| d == 0).count(),
        indicator_countries,
        unjoinable_indicator_countries: unjoinable,
    };
    info!("ingested {} countries × {} products", summary.countries, summary.products);
    ws.write_json("ingest.json", &summary)
}

fn ingest(args: &IngestArgs) -> CliResult<()> {
    let mut ws = open(&args.out.out, "ingest", args)?;
    ingest_into(&mut ws, &args.input, args.year, args.rca_threshold, args.indicators.as_deref())?;
    ws.finish()
}

fn read_specialization(ws: &mut Workspace) -> CliResult<SpecializationMatrix> {
    let bytes = ws.read_stage(SPECIALIZATION, "ingest")?;
    let lm = read_matrix_csv(&bytes[..]).map_err(in_file(&ws.path(SPECIALIZATION)))?;
    Ok(SpecializationMatrix::new(lm.row_codes, lm.col_codes, lm.values)?)
}

fn write_scores(ws: &mut Workspace, name: &str, codes: &[String], values: &[f64]) -> CliResult<()> {
    let ranks = ranks_descending(values);
    let mut w = csv::Writer::from_writer(Vec::new());
    let rows = std::iter::once(["code".to_string(), "value".into(), "rank".into()])
        .chain(codes.iter().zip(values).zip(&ranks).map(|((c, v), r)| [c.clone(), v.to_string(), r.to_string()]));
    for row in rows {
        w.write_record(&row).map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    ws.write(name, &bytes)
}

fn read_scores(ws: &mut Workspace, name: &'static str, stage: &'static str) -> CliResult<(Vec<String>, Vec<f64>)> {
    let bytes = ws.read_stage(name, stage)?;
    let path = ws.path(name);
    let mut rdr = csv::Reader::from_reader(&bytes[..]);
    let (mut codes, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::InFile { path: path.clone(), source: Error::Csv(e) })?;
        let v = rec.get(1).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| CliError::InFile {
            path: path.clone(),
            source: Error::Parse { line: i as u64 + 2, message: "expected code,value,rank".into() },
        })?;
        codes.push(rec[0].to_string());
        values.push(v);
    }
    Ok((codes, values))
}

#[derive(Debug, Serialize)]
struct ComplexityDiagnostics {
    second_eigenvalue_countries: f64,
    second_eigenvalue_products: f64,
    residual: f64,
    iterations: usize,
    degenerate: bool,
    countries: usize,
    products: usize,
    pruned_countries: Vec<String>,
    pruned_products: usize,
    warnings: Vec<String>,
}

fn complexity(args: &ComplexityArgs) -> CliResult<()> {
    let mut ws = open(&args.out.out, "complexity", args)?;
    if let Some(input) = &args.input {
        let year = args.year.ok_or_else(|| CliError::Usage("--year is required with --in".into()))?;
        ingest_into(&mut ws, input, year, args.rca_threshold, None)?;
    }
    let raw = read_specialization(&mut ws)?;
    let m = raw.prune();
    let result = eci_pci(&m)?;
    write_scores(&mut ws, ECI, &result.countries, &result.eci)?;
    write_scores(&mut ws, PCI, &result.products, &result.pci)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let diagnostics = ComplexityDiagnostics {
        second_eigenvalue_countries: result.second_eigenvalue_c,
        second_eigenvalue_products: result.second_eigenvalue_p,
        residual: result.residual,
        iterations: result.iterations,
        degenerate: result.degenerate,
        countries: m.n_countries(),
        products: m.n_products(),
        pruned_countries: raw.countries.iter().filter(|c| !m.countries.contains(c)).cloned().collect(),
        pruned_products: raw.n_products() - m.n_products(),
        warnings: result.warnings.clone(),
    };
    ws.write_json("complexity.json", &diagnostics)?;
    ws.finish()
}

/// The empirical network with its PCI, from the product-space cache.
fn read_network(ws: &mut Workspace) -> CliResult<ProximityNetwork> {
    let (codes, pci) = read_scores(ws, PCI, "complexity")?;
    let bytes = ws.read_stage(PROXIMITY, "product-space")?;
    let phi = read_cache(&bytes[..]).map_err(in_file(&ws.path(PROXIMITY)))?;
    Ok(ProximityNetwork::new(phi, codes)?.with_pci(pci)?)
}

fn product_space(args: &SeededArgs) -> CliResult<()> {
    let mut ws = open(&args.out.out, "product-space", args)?;
    let m = read_specialization(&mut ws)?.prune();
    let (codes, pci) = read_scores(&mut ws, PCI, "complexity")?;
    if codes != m.products {
        return Err(CliError::Usage(format!(
            "{PCI} does not match the specialization matrix; rerun `capspace complexity`"
        )));
    }
    let net = proximity_matrix(&m)?.with_pci(pci)?;
    let mut cache = Vec::new();
    write_cache(&mut cache, net.phi())?;
    ws.write(PROXIMITY, &cache)?;
    ws.write("network.csv", &csv_bytes(|b| net.write_edges_csv(b))?)?;
    let rep = network_report(&net, ws.seed(args.seed, "leiden"))?;
    info!("network: {} nodes, {} edges, density {:.4}", rep.nodes, rep.edges, rep.density);
    ws.write_json("report.json", &rep)?;
    ws.finish()
}

#[derive(Debug, Serialize, Deserialize)]
struct GmmOutput {
    best_n: usize,
    /// `(n, AIC)` per fitted component count.
    aic_table: Vec<(usize, f64)>,
    fit: GmmFit,
    ks_statistic: f64,
    ks_p_value: f64,
}

fn gmm(args: &GmmArgs) -> CliResult<()> {
    let mut ws = open(&args.seeded.out.out, "gmm", args)?;
    let (_, pci) = read_scores(&mut ws, PCI, "complexity")?;
    let sel = select_n_by_aic(&pci, args.max_components, ws.seed(args.seeded.seed, "gmm"))?;
    let fit = sel.best().clone();
    let (d, p) = gmm_ks_test(&fit, &pci)?;
    info!("{} components minimize AIC; KS D = {d:.4}, p = {p:.4}", sel.best_n);
    ws.write_json(GMM, &GmmOutput { best_n: sel.best_n, aic_table: sel.table, fit, ks_statistic: d, ks_p_value: p })?;
    ws.finish()
}

fn read_gmm(ws: &mut Workspace) -> CliResult<GmmFit> {
    Ok(ws.read_stage_json::<GmmOutput>(GMM, "gmm")?.fit)
}

fn model_config(m: &ModelArgs) -> ModelConfig {
    ModelConfig {
        n_products: m.n_products,
        cap_max: m.cap_max,
        block_size: m.block_size,
        mode: match m.mode {
            ModeArg::Constant => ModeKind::Constant,
            ModeArg::Beta => ModeKind::Beta,
        },
        kappa: m.kappa,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationOutput {
    config: CalibrationConfig,
    result: CalibrationResult,
}

fn calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let mut ws = open(&args.seeded.out.out, "calibrate", args)?;
    let net = read_network(&mut ws)?;
    let gmm = read_gmm(&mut ws)?;
    let config = CalibrationConfig {
        population: args.pop,
        generations: args.gens,
        seed: ws.seed(args.seeded.seed, "calibrate"),
        model: model_config(&args.model),
        ..CalibrationConfig::default()
    };
    let result = calibrate_block_params(&net, &gmm, &config)?;
    info!("calibrated: weight KS D = {:.4} after {} evaluations", result.best_ks, result.evaluations);
    ws.write_json(CALIBRATION, &CalibrationOutput { config, result })?;
    ws.finish()
}

fn simulate_cmd(args: &SimulateArgs) -> CliResult<()> {
    let mut ws = open(&args.seeded.out.out, "simulate", args)?;
    let gmm = read_gmm(&mut ws)?;
    let (_, pci) = read_scores(&mut ws, PCI, "complexity")?;
    let params = match &args.params {
        Some(p) if p.len() == 6 => BlockParams::from_slice(p),
        Some(p) => return Err(CliError::Usage(format!("--params needs 6 values, got {}", p.len()))),
        None if ws.exists(CALIBRATION) => ws.read_stage_json::<CalibrationOutput>(CALIBRATION, "calibrate")?.result.params,
        None => {
            warn!("no --params and no {CALIBRATION}; using default block proximities");
            BlockParams::default()
        }
    };
    params.validate()?;
    let model = model_config(&args.model);
    let sim = simulate(&gmm, mean(&pci), &params, &model, ws.seed(args.seeded.seed, "simulate"))?;
    let codes: Vec<String> = (0..sim.space.n_capabilities()).map(|i| format!("k{i}")).collect();
    ws.write(SPACE, &csv_bytes(|b| write_matrix_csv(b, &codes, &codes, sim.space.phi()))?)?;
    ws.write_json(CATALOG, &sim.catalog)?;
    ws.write("simulated_network.csv", &csv_bytes(|b| sim.network.write_edges_csv(b))?)?;
    let rep = network_report(&sim.network, ws.seed(args.seeded.seed, "simulate-leiden"))?;
    ws.write_json("simulation.json", &serde_json::json!({ "params": params, "model": model, "report": rep }))?;
    ws.finish()
}

fn parse_rho(s: &str) -> CliResult<Rho> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("invalid ρ value {s:?}")))?;
    if v.is_nan() || v == f64::INFINITY || v > 1.0 {
        return Err(CliError::Usage(format!("ρ must be at most 1 or -inf, got {s}")));
    }
    Ok(Rho::from_f64(v))
}

fn infer(args: &InferArgs) -> CliResult<()> {
    let mut ws = open(&args.seeded.out.out, "infer", args)?;
    let config = InferenceConfig {
        rho_grid: args.rho_grid.iter().map(|s| parse_rho(s)).collect::<CliResult<_>>()?,
        nu_grid: args.nu_grid.clone(),
        schedule: AnnealSchedule {
            iterations: args.iters,
            restarts: args.restarts,
            acceptance: if args.greedy { Acceptance::Greedy } else { Acceptance::Metropolis },
            ..AnnealSchedule::default()
        },
    };
    let (products, pci) = read_scores(&mut ws, PCI, "complexity")?;
    let bytes = ws.read_stage(EXPORTS, "ingest")?;
    let exports = ExportTable::read_csv(&bytes[..], 0).map_err(in_file(&ws.path(EXPORTS)))?;
    let catalog: ProductCatalog = ws.read_stage_json(CATALOG, "simulate")?;
    let bytes = ws.read_stage(SPACE, "simulate")?;
    let space = CapabilitySpace::from_matrix(read_matrix_csv(&bytes[..]).map_err(in_file(&ws.path(SPACE)))?.values)?;
    let column: HashMap<&str, usize> = exports.products().iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let cols: Vec<usize> = products
        .iter()
        .map(|p| column.get(p.as_str()).copied().ok_or_else(|| CliError::Usage(format!("product {p} missing from {EXPORTS}"))))
        .collect::<CliResult<_>>()?;
    let countries: Vec<String> = match &args.countries {
        Some(list) => {
            if let Some(c) = list.iter().find(|c| exports.country_index(c).is_none()) {
                return Err(CliError::Usage(format!("country {c} not in {EXPORTS}")));
            }
            list.clone()
        }
        None => exports.countries().to_vec(),
    };
    let stage_seed = ws.seed(args.seeded.seed, "infer");
    let results: Vec<(String, Option<InferenceResult>)> = countries
        .par_iter()
        .map(|code| {
            let row = exports.row(exports.country_index(code).unwrap());
            let x: Vec<f64> = cols.iter().map(|&j| row[j]).collect();
            let target = match target_vector(&x, &pci, &catalog) {
                Ok(t) => t,
                Err(Error::Validation(msg)) => {
                    warn!("skipping {code}: {msg}");
                    return Ok((code.clone(), None));
                }
                Err(e) => return Err(e),
            };
            let problem = Problem { space: &space, catalog: &catalog, target: &target };
            let seed = capspace_core::seed::named(stage_seed, code);
            Ok((code.clone(), Some(optimize_rho_nu(&problem, &config, seed)?)))
        })
        .collect::<capspace_core::Result<_>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["code", "k0", "k1", "kl", "clarity", "rho", "nu"]).map_err(Error::Csv)?;
    let mut capabilities = BTreeMap::new();
    let mut full = BTreeMap::new();
    for (code, r) in results {
        let Some(r) = r else { continue };
        let clarity = r.clarity.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([
            code.clone(),
            r.k0.to_string(),
            r.k1.to_string(),
            r.kl.to_string(),
            clarity,
            r.rho.to_string(),
            r.nu.to_string(),
        ])
        .map_err(Error::Csv)?;
        capabilities.insert(code.clone(), r.capabilities.clone());
        full.insert(code, r);
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    info!("inferred {} countries", capabilities.len());
    ws.write(INFERENCE, &bytes)?;
    ws.write_json("capabilities.json", &capabilities)?;
    ws.write_json("inference.json", &full)?;
    ws.finish()
}

#[derive(Debug, Clone, PartialEq)]
struct InferredRow {
    k1: f64,
    rho: f64,
    nu: f64,
}

fn read_inference(ws: &mut Workspace) -> CliResult<BTreeMap<String, InferredRow>> {
    let bytes = ws.read_stage(INFERENCE, "infer")?;
    let path = ws.path(INFERENCE);
    let mut rdr = csv::Reader::from_reader(&bytes[..]);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::InFile { path: path.clone(), source: Error::Csv(e) })?;
        let num = |k: usize| -> CliResult<f64> {
            rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| CliError::InFile {
                path: path.clone(),
                source: Error::Parse { line: i as u64 + 2, message: format!("bad field {k}") },
            })
        };
        out.insert(rec[0].to_string(), InferredRow { k1: num(2)?, rho: num(5)?, nu: num(6)? });
    }
    Ok(out)
}

fn zscore(v: &[f64]) -> Vec<f64> {
    let (m, s) = (mean(v), std_pop(v));
    v.iter().map(|x| if s > 0.0 { (x - m) / s } else { 0.0 }).collect()
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RegressionEntry {
    Ols { spec: String, model: OlsResult, vif: Vec<f64> },
    OrderedLogit { spec: String, model: OrderedLogitResult },
}

fn regress(args: &RegressArgs) -> CliResult<()> {
    let mut ws = open(&args.out.out, "regress", args)?;
    let explicit = !args.spec.is_empty();
    let specs: Vec<String> = if explicit {
        args.spec.clone()
    } else {
        ["1", "2", "3", "4", "logit-rho", "logit-nu"].map(String::from).to_vec()
    };
    for s in &specs {
        if !matches!(s.as_str(), "1" | "2" | "3" | "4" | "logit-rho" | "logit-nu") {
            return Err(CliError::Usage(format!("unknown spec {s:?}; expected 1-4, logit-rho or logit-nu")));
        }
    }
    let needs_inference = |s: &str| !matches!(s, "1" | "2");
    let bytes = ws.read_input(&args.indicators)?;
    let table = parse_indicators_csv(&bytes[..]).map_err(in_file(&args.indicators))?;
    let (countries, eci) = read_scores(&mut ws, ECI, "complexity")?;
    let inferred = if specs.iter().any(|s| needs_inference(s)) && (explicit || ws.exists(INFERENCE)) {
        Some(read_inference(&mut ws)?)
    } else {
        None
    };
    // capability complexity is standardized across inferred countries
    let k1z: BTreeMap<&str, f64> = match &inferred {
        Some(rows) => {
            let raw: Vec<f64> = rows.values().map(|r| r.k1).collect();
            rows.keys().map(String::as_str).zip(zscore(&raw)).collect()
        }
        None => BTreeMap::new(),
    };
    let panel: Vec<PanelRow> = countries
        .iter()
        .zip(&eci)
        .filter_map(|(code, &e)| {
            let obs = table.observation(code, args.start_year, args.window)?;
            let inf = inferred.as_ref().and_then(|m| m.get(code));
            Some(PanelRow {
                country: code.clone(),
                growth: obs.growth,
                log_gdp_pc: obs.log_gdp_pc,
                population: obs.population,
                investment_gdp: obs.investment_gdp,
                export_gdp: obs.export_gdp,
                eci: e,
                k1: k1z.get(code.as_str()).copied(),
                rho: inf.map(|r| r.rho),
                nu: inf.map(|r| r.nu),
            })
        })
        .collect();
    info!("{} countries have complete indicators", panel.len());
    let runnable: Vec<&String> = specs
        .iter()
        .filter(|s| {
            let ok = inferred.is_some() || !needs_inference(s);
            if !ok {
                warn!("skipping spec {s}: no {INFERENCE}");
            }
            ok
        })
        .collect();
    let entries: Vec<RegressionEntry> = runnable
        .par_iter()
        .map(|s| -> capspace_core::Result<RegressionEntry> {
            let spec = s.to_string();
            Ok(match s.as_str() {
                "logit-rho" => RegressionEntry::OrderedLogit { spec, model: parameter_logit(&panel, OrdinalTarget::Rho)? },
                "logit-nu" => RegressionEntry::OrderedLogit { spec, model: parameter_logit(&panel, OrdinalTarget::Nu)? },
                id => {
                    let g = GrowthSpec::from_id(id.parse().unwrap()).unwrap();
                    let r = growth_regression(&panel, g)?;
                    RegressionEntry::Ols { spec, model: r.model, vif: r.vif }
                }
            })
        })
        .collect::<capspace_core::Result<_>>()?;
    let mut tidy: Vec<TidyRow> = Vec::new();
    for e in &entries {
        match e {
            RegressionEntry::Ols { spec, model, vif } => {
                if let Some(v) = vif.iter().find(|v| **v >= 10.0) {
                    warn!("spec {spec}: VIF {v:.1} suggests multicollinearity");
                }
                info!("spec {spec}: n = {}, R² = {:.3}", model.n, model.r_squared);
                tidy.extend(model.tidy(spec));
            }
            RegressionEntry::OrderedLogit { spec, model } => {
                info!("{spec}: n = {}, pseudo R² = {:.3}", model.n, model.pseudo_r_squared);
                tidy.extend(model.tidy(spec));
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &tidy {
        w.serialize(row).map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    ws.write("regressions.csv", &bytes)?;
    ws.write_json("regressions.json", &entries)?;
    ws.finish()
}

fn report(args: &OutArgs) -> CliResult<()> {
    let mut ws = open(&args.out, "report", args)?;
    let net = read_network(&mut ws)?;
    let pci = net.pci.clone().unwrap_or_default();
    if net.edge_count() == 0 {
        warn!("the network has no edges; writing placeholder figures");
        for (name, title) in [
            ("weight_histogram", "Proximity weights"),
            ("degree_histogram", "Weighted degree"),
            ("centrality_histogram", "Eigenvector centrality"),
            ("heatmap", "Product Space"),
        ] {
            ws.write(&format!("figures/{name}.svg"), plot::placeholder(title, "empty network").as_bytes())?;
        }
    } else {
        let centrality = eigenvector_centrality(&net)?;
        ws.write("figures/weight_histogram.svg", plot::histogram("Proximity weights", "weight", &net.positive_weights()).as_bytes())?;
        ws.write("figures/degree_histogram.svg", plot::histogram("Weighted degree", "degree", &net.degrees()).as_bytes())?;
        ws.write(
            "figures/centrality_histogram.svg",
            plot::histogram("Eigenvector centrality", "centrality", &centrality).as_bytes(),
        )?;
        ws.write("figures/heatmap.svg", plot::heatmap("Product Space", net.phi(), &pci).as_bytes())?;
    }
    if ws.exists(INFERENCE) && ws.exists(ECI) {
        let (codes, eci) = read_scores(&mut ws, ECI, "complexity")?;
        let inferred = read_inference(&mut ws)?;
        let pairs: Vec<(String, f64, f64)> =
            codes.iter().zip(&eci).filter_map(|(c, e)| inferred.get(c).map(|r| (c.clone(), *e, r.k1))).collect();
        let xs = zscore(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        let ys = zscore(&pairs.iter().map(|p| p.2).collect::<Vec<_>>());
        let points: Vec<(String, f64, f64)> =
            pairs.into_iter().zip(xs.into_iter().zip(ys)).map(|((c, _, _), (x, y))| (c, x, y)).collect();
        let svg = plot::scatter("ECI vs average capability complexity", "ECI (standardized)", "K1 (standardized)", &points);
        ws.write("figures/eci_k1_scatter.svg", svg.as_bytes())?;
    } else {
        warn!("no {INFERENCE}; skipping the ECI-K1 scatter");
    }
    ws.finish()
}
