use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::featurize::IndicatorRule;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Accumulates everything a run reports, then writes `<command>_report.json`.
pub struct Report {
    command: String,
    seed: u64,
    config: Value,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    rules: Vec<(String, IndicatorRule)>,
    results: Map<String, Value>,
    started: SystemTime,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Report {
            command: command.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            rules: Vec::new(),
            results: Map::new(),
            started: SystemTime::now(),
        }
    }

    /// Records the digest of an input file (and of a packed-binary manifest, if present).
    pub fn input(&mut self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::invalid(format!("input file {} does not exist", path.display())));
        }
        self.inputs.push(digest_file(path)?);
        let manifest = crate::ingest::manifest_path(path);
        if manifest.exists() {
            self.inputs.push(digest_file(&manifest)?);
        }
        Ok(())
    }

    pub fn rule(&mut self, name: &str, rule: &IndicatorRule) {
        self.rules.push((name.to_string(), rule.clone()));
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes `contents` to `dir/name` and lists it in the report.
    pub fn write_output(&mut self, dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn note_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn to_json(&self, deterministic: bool) -> Value {
        let mut v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "indicator_rules": self.rules.iter().map(|(n, r)| json!({"name": n, "rule": r})).collect::<Vec<_>>(),
            "results": self.results,
        });
        if !deterministic {
            let now = SystemTime::now();
            let unix = now.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let elapsed = now.duration_since(self.started).map(|d| d.as_secs_f64()).unwrap_or(0.0);
            v["generated_at_unix"] = json!(unix);
            v["elapsed_seconds"] = json!(elapsed);
        }
        v
    }

    pub fn write(&self, dir: &Path, deterministic: bool) -> Result<PathBuf> {
        let path = dir.join(format!("{}_report.json", self.command));
        let mut text = serde_json::to_string_pretty(&self.to_json(deterministic))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
