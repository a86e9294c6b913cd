//! Output directory bookkeeping and the run manifest.
//!
//! Every command writes its artefacts through a [`Run`], which stamps JSON
//! and text reports with the command, config hash and seed, refuses to
//! overwrite any input, and finally writes `manifest.json`:
//!
//! ```json
//! {
//!   "format": "vhfplan-manifest v1",
//!   "command": "pm1",
//!   "argv": ["pm1", "--map", "town/map.json", ...],
//!   "config": { ...every flag but --out and --workers... },
//!   "config_hash": "<sha256 of the compact config JSON>",
//!   "seed": 7,
//!   "model_checksum": "<payload digest of the model used or produced>",
//!   "inputs": [{"path": "town/map.json", "sha256": "..."}],
//!   "outputs": [{"path": "report.json", "sha256": "..."}],
//!   "versions": {"vhfplan": "0.1.0", "model_format": "v1", "raster_format": "vhfplan-raster v1"},
//!   "workers": 4
//! }
//! ```
//!
//! No clock readings are recorded and reports do not depend on the worker
//! count, so rerunning a manifest's `argv` reproduces its outputs byte for
//! byte.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use vhfplan_core::models::MODEL_VERSION;

use crate::CliError;

pub const MANIFEST_FORMAT: &str = "vhfplan-manifest v1";
pub const MANIFEST_FILE: &str = "manifest.json";

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct Run {
    command: &'static str,
    argv: Vec<String>,
    config: Value,
    config_hash: String,
    seed: Option<u64>,
    workers: usize,
    out: Option<PathBuf>,
    model_checksum: Option<String>,
    inputs: Vec<(PathBuf, String)>,
    /// Canonical input paths; outputs may not land on them.
    guarded: Vec<PathBuf>,
    outputs: Vec<(String, String)>,
}

impl Run {
    pub fn new(
        command: &'static str,
        argv: Vec<String>,
        config: &impl Serialize,
        seed: Option<u64>,
        out: Option<&Path>,
    ) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Usage(e.to_string()))?;
        let config_hash = sha256(&serde_json::to_vec(&config).expect("JSON values serialize"));
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        Ok(Self {
            command,
            argv,
            config,
            config_hash,
            seed,
            workers: rayon::current_num_threads(),
            out: out.map(Path::to_path_buf),
            model_checksum: None,
            inputs: Vec::new(),
            guarded: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn set_model_checksum(&mut self, checksum: String) {
        self.model_checksum = Some(checksum);
    }

    /// Records an input file and its digest.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push((path.to_path_buf(), sha256(&bytes)));
        self.guarded.push(path.canonicalize().map_err(|e| CliError::io(path, e))?);
        Ok(())
    }

    pub fn provenance(&self) -> Value {
        json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
        })
    }

    /// `key: value` lines for text artefacts, each wrapped in `open` and
    /// `close`.
    pub fn provenance_lines(&self, open: &str, close: &str) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        [("command", self.command.to_string()), ("config_hash", self.config_hash.clone()), ("seed", seed)]
            .iter()
            .map(|(k, v)| format!("{open}{k}: {v}{close}\n"))
            .collect()
    }

    fn target(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = self
            .out
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{} writes files and needs --out", self.command)))?;
        let path = dir.join(name);
        if let Ok(canonical) = path.canonicalize() {
            if self.guarded.contains(&canonical) {
                return Err(CliError::Usage(format!("refusing to overwrite input {}", path.display())));
            }
        }
        Ok(path)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.target(name)?;
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push((name.to_string(), sha256(bytes)));
        Ok(path)
    }

    /// Writes `body` with a leading `provenance` member, pretty-printed.
    pub fn write_json(&mut self, name: &str, body: Value) -> Result<PathBuf, CliError> {
        let mut doc = Map::new();
        doc.insert("provenance".into(), self.provenance());
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc)).expect("JSON values serialize");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn manifest(&self) -> Value {
        let files = |v: &[(String, String)]| -> Vec<Value> {
            v.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect()
        };
        let inputs: Vec<(String, String)> =
            self.inputs.iter().map(|(p, h)| (p.display().to_string(), h.clone())).collect();
        json!({
            "format": MANIFEST_FORMAT,
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "model_checksum": self.model_checksum,
            "inputs": files(&inputs),
            "outputs": files(&self.outputs),
            "versions": {
                "vhfplan": env!("CARGO_PKG_VERSION"),
                "model_format": MODEL_VERSION,
                "raster_format": "vhfplan-raster v1",
            },
            "workers": self.workers,
        })
    }

    /// Writes the manifest; commands without `--out` skip it.
    pub fn finish(self) -> Result<Option<PathBuf>, CliError> {
        let Some(dir) = &self.out else { return Ok(None) };
        let path = dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(&self.manifest()).expect("JSON values serialize");
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(Some(path))
    }
}
