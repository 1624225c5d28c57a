use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliResult;

/// Real value at 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Record of one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
    pub results: Map<String, Value>,
}

/// Output directory plus the bookkeeping that ends up in the manifest.
pub struct Run {
    dir: PathBuf,
    command: String,
    started: Instant,
    pub parameters: Map<String, Value>,
    pub results: Map<String, Value>,
    outputs: Vec<OutputFile>,
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name))?;
    Ok(())
}

impl Run {
    pub fn new(dir: &Path, command: &str) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            started: Instant::now(),
            parameters: Map::new(),
            results: Map::new(),
            outputs: Vec::new(),
        })
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Writes `rows` under `header` to `name` and records its hash.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::error::CliError::Io(e.to_string()))?;
        write_atomic(&self.dir, name, &bytes)?;
        self.outputs.push(OutputFile {
            file: name.to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        Ok(self.dir.join(name))
    }

    /// Writes `<stem>.manifest.json`.
    pub fn finish(self, stem: &str) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            parameters: self.parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            results: self.results,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let name = format!("{stem}.manifest.json");
        write_atomic(&self.dir, &name, &bytes)?;
        Ok(self.dir.join(name))
    }
}
