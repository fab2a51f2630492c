use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const COUNTRIES: usize = 30;
const PRODUCTS: usize = 60;

/// Nested exports: country c is competitive in the `level(c)` least complex
/// products and exports a little of some others.
fn trade_csv() -> String {
    let mut s = String::from("year,exporter,importer,product,value\n");
    for c in 0..COUNTRIES {
        let level = 6 + c * (PRODUCTS - 6) / COUNTRIES;
        for p in 0..PRODUCTS {
            let jitter = ((c * 31 + p * 17) % 7) as f64;
            let v = if p < level { 100.0 * (1.0 + jitter) } else { ((c * 13 + p * 7) % 3) as f64 };
            if v > 0.0 {
                s.push_str(&format!("2005,C{c:02},W,P{p:02},{v}\n"));
            }
        }
        s.push_str(&format!("2004,C{c:02},W,P00,5\n"));
    }
    s
}

fn indicators_csv() -> String {
    let mut s = String::from("country,indicator,year,value\n");
    for c in 0..COUNTRIES {
        let f = c as f64;
        s.push_str(&format!("C{c:02},gdp_pc,2005,{}\n", 1000.0 * (1.0 + f) + 37.0 * ((c * 7) % 5) as f64));
        s.push_str(&format!("C{c:02},population,2005,{}\n", 5.0 + ((c * 11) % 13) as f64));
        s.push_str(&format!("C{c:02},investment_gdp,2005,{}\n", 18.0 + ((c * 5) % 9) as f64));
        s.push_str(&format!("C{c:02},export_gdp,2005,{}\n", 25.0 + ((c * 3) % 17) as f64));
        for y in 2006..=2010 {
            s.push_str(&format!("C{c:02},gdp_pc_growth,{y},{}\n", 1.0 + ((c * y as usize) % 5) as f64 * 0.5));
        }
    }
    s
}

fn capspace(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_capspace"));
    cmd.args(args).env("RUST_LOG", "warn");
    match threads {
        Some(t) => cmd.env("CAPSPACE_THREADS", t),
        None => cmd.env_remove("CAPSPACE_THREADS"),
    };
    cmd.output().unwrap()
}

fn ok(args: &[&str], threads: Option<&str>) {
    let out = capspace(args, threads);
    assert!(
        out.status.success(),
        "{args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let trade = dir.join("trade.csv");
    let ind = dir.join("wdi.csv");
    fs::write(&trade, trade_csv()).unwrap();
    fs::write(&ind, indicators_csv()).unwrap();
    (trade, ind)
}

fn run_pipeline(inputs: &Path, out: &Path, seed: &str, threads: Option<&str>) {
    let (trade, ind) = (inputs.join("trade.csv"), inputs.join("wdi.csv"));
    let o = out.to_str().unwrap();
    let t = threads;
    ok(&["ingest", "--in", trade.to_str().unwrap(), "--year", "2005", "--indicators", ind.to_str().unwrap(), "--out", o], t);
    ok(&["complexity", "--out", o], t);
    ok(&["product-space", "--seed", seed, "--out", o], t);
    ok(&["gmm", "--max-components", "3", "--seed", seed, "--out", o], t);
    let model = ["--n-products", "40", "--cap-max", "6", "--block-size", "3"];
    let mut cal = vec!["calibrate", "--pop", "4", "--gens", "2", "--seed", seed, "--out", o];
    cal.extend(model);
    ok(&cal, t);
    let mut sim = vec!["simulate", "--seed", seed, "--out", o];
    sim.extend(model);
    ok(&sim, t);
    ok(
        &["infer", "--rho-grid", "1,-inf", "--nu-grid", "1,2", "--restarts", "1", "--iters", "10", "--seed", seed, "--out", o],
        t,
    );
    ok(
        &["regress", "--indicators", ind.to_str().unwrap(), "--start-year", "2005", "--window", "5", "--spec", "1,2,3,4", "--out", o],
        t,
    );
    ok(&["report", "--out", o], t);
}

/// Every output file except the manifest, which carries wall-clock times.
fn payloads(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn pipeline_is_deterministic_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    write_inputs(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(tmp.path(), &a, "42", Some("1"));
    run_pipeline(tmp.path(), &b, "42", Some("3"));
    let (pa, pb) = (payloads(&a), payloads(&b));
    for name in [
        "exports.csv",
        "specialization.csv",
        "eci.csv",
        "pci.csv",
        "network.csv",
        "report.json",
        "gmm.json",
        "calibration.json",
        "catalog.json",
        "space.csv",
        "inference.csv",
        "capabilities.json",
        "regressions.json",
        "regressions.csv",
        "figures/weight_histogram.svg",
        "figures/heatmap.svg",
        "figures/eci_k1_scatter.svg",
    ] {
        assert!(pa.contains_key(name), "missing {name}");
    }
    assert_eq!(pa.keys().collect::<Vec<_>>(), pb.keys().collect::<Vec<_>>());
    for (name, bytes) in &pa {
        assert!(bytes == &pb[name], "{name} differs between runs");
    }

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let stages = manifest["stages"].as_object().unwrap();
    assert_eq!(stages.len(), 9);
    assert_eq!(stages["calibrate"]["root_seed"], 42);
    assert_eq!(stages["infer"]["threads"], 1);
    assert!(stages["calibrate"]["seeds"]["calibrate"].is_u64());
    assert_eq!(stages["calibrate"]["config"]["pop"], 4);

    let c = tmp.path().join("c");
    run_pipeline(tmp.path(), &c, "43", None);
    assert_ne!(payloads(&c)["calibration.json"], pa["calibration.json"]);
}

#[test]
fn complexity_from_trade_writes_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let (trade, _) = write_inputs(tmp.path());
    let out = tmp.path().join("out");
    ok(&["complexity", "--in", trade.to_str().unwrap(), "--year", "2005", "--out", out.to_str().unwrap()], None);
    let eci = fs::read_to_string(out.join("eci.csv")).unwrap();
    let mut lines = eci.lines();
    assert_eq!(lines.next(), Some("code,value,rank"));
    assert_eq!(lines.count(), COUNTRIES);
    assert!(out.join("pci.csv").is_file() && out.join("manifest.json").is_file());
    let diag: Value = serde_json::from_slice(&fs::read(out.join("complexity.json")).unwrap()).unwrap();
    assert!(diag["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn manifest_hash_follows_input_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (trade, _) = write_inputs(tmp.path());
    let out = tmp.path().join("out");
    let args = ["complexity", "--in", trade.to_str().unwrap(), "--year", "2005", "--out", out.to_str().unwrap()];
    let hash = || -> String {
        let m: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        m["stages"]["complexity"]["inputs"][trade.to_str().unwrap()].as_str().unwrap().to_string()
    };
    ok(&args, None);
    let first = hash();
    ok(&args, None);
    assert_eq!(hash(), first);
    let mut bytes = fs::read(&trade).unwrap();
    let last_digit = bytes.iter().rposition(|b| b.is_ascii_digit()).unwrap();
    bytes[last_digit] = if bytes[last_digit] == b'9' { b'8' } else { bytes[last_digit] + 1 };
    fs::write(&trade, &bytes).unwrap();
    ok(&args, None);
    assert_ne!(hash(), first);
    assert_eq!(hash().len(), 64);
}

#[test]
fn missing_input_exits_one_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = capspace(
        &["complexity", "--in", missing.to_str().unwrap(), "--year", "2005", "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let out = capspace(&["complexity", "--bogus"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(capspace(&["--help"], None).status.code(), Some(0));
}

#[test]
fn stochastic_commands_require_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = capspace(&["gmm", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn report_without_upstream_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = capspace(&["report", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capspace complexity"));
}

#[test]
fn disconnected_trade_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let trade = tmp.path().join("trade.csv");
    // two countries each specialized in its own pair of products
    fs::write(
        &trade,
        "year,exporter,importer,product,value\n2005,A,W,p1,10\n2005,A,W,p2,10\n2005,B,W,p3,10\n2005,B,W,p4,10\n",
    )
    .unwrap();
    let out = capspace(
        &["complexity", "--in", trade.to_str().unwrap(), "--year", "2005", "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = capspace(&["report", "--out", "."], Some("zero"));
    assert_eq!(out.status.code(), Some(1));
}
