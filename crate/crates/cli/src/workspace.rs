//! Output directory handling: hashed inputs, atomic writes and the run
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config: serde_json::Value,
    /// Path → sha256 of every file the stage read.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub root_seed: Option<u64>,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Latest record per stage name.
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    drop(f);
    fs::rename(&tmp, path).map_err(err)
}

pub struct Workspace {
    pub dir: PathBuf,
    stage: &'static str,
    record: StageRecord,
    clock: Instant,
}

impl Workspace {
    pub fn open(dir: &Path, stage: &'static str, config: serde_json::Value) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Self {
            dir: dir.to_path_buf(),
            stage,
            record: StageRecord {
                config,
                threads: rayon::current_num_threads(),
                started_unix,
                ..StageRecord::default()
            },
            clock: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    /// Read and hash an arbitrary input file.
    pub fn read_input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        self.record.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    /// Read an output of an earlier stage from the workspace directory.
    pub fn read_stage(&mut self, file: &'static str, stage: &'static str) -> CliResult<Vec<u8>> {
        let path = self.path(file);
        if !path.is_file() {
            return Err(CliError::MissingStage { stage, file, dir: self.dir.clone() });
        }
        self.read_input(&path)
    }

    pub fn read_stage_json<T: serde::de::DeserializeOwned>(&mut self, file: &'static str, stage: &'static str) -> CliResult<T> {
        let bytes = self.read_stage(file, stage)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::InFile { path: self.path(file), source: capspace_core::Error::Json(e) })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Write { path: parent.to_path_buf(), source })?;
        }
        write_atomic(&path, bytes)?;
        self.record.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(capspace_core::Error::Json)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn seed(&mut self, root: u64, name: &str) -> u64 {
        self.record.root_seed = Some(root);
        let s = capspace_core::seed::named(root, name);
        self.record.seeds.insert(name.to_string(), s);
        s
    }

    /// Merge this stage into the manifest and write it.
    pub fn finish(mut self) -> CliResult<()> {
        self.record.wall_clock_secs = self.clock.elapsed().as_secs_f64();
        let path = self.path(MANIFEST);
        let mut manifest: RunManifest = fs::read(&path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default();
        manifest.version = env!("CARGO_PKG_VERSION").to_string();
        manifest.stages.insert(self.stage.to_string(), self.record);
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(capspace_core::Error::Json)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)
    }
}
