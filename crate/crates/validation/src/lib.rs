//! Helpers for driving `fluidbound` in-process and reading back what it wrote.

use std::collections::HashMap;
use std::path::Path;

use serde_json::Value;

/// Runs `fluidbound --out <out> <args...>` and returns its exit code.
pub fn run_cli(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["fluidbound".into(), "--out".into(), out.as_os_str().to_owned()];
    argv.extend(args.iter().map(|a| a.into()));
    fluidbound_cli::run_from(argv)
}

/// A CSV file read into columns keyed by header name.
pub struct Table {
    pub header: Vec<String>,
    columns: HashMap<String, Vec<String>>,
    len: usize,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, String> {
        let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let mut columns: HashMap<String, Vec<String>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
        let mut len = 0;
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            for (h, v) in header.iter().zip(rec.iter()) {
                columns.get_mut(h).unwrap().push(v.to_string());
            }
            len += 1;
        }
        Ok(Self { header, columns, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn raw(&self, name: &str) -> Result<&[String], String> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| format!("missing column {name}"))
    }

    /// Column values; empty cells become `None`.
    pub fn optional(&self, name: &str) -> Result<Vec<Option<f64>>, String> {
        self.raw(name)?
            .iter()
            .map(|v| {
                if v.is_empty() {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|e| format!("{name}: {v}: {e}"))
                }
            })
            .collect()
    }

    pub fn numbers(&self, name: &str) -> Result<Vec<f64>, String> {
        self.optional(name)?
            .into_iter()
            .map(|v| v.ok_or_else(|| format!("empty cell in {name}")))
            .collect()
    }
}

/// Parsed `<stem>.manifest.json`.
pub fn read_manifest(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// A numeric entry of the manifest's `results` object.
pub fn manifest_result(manifest: &Value, key: &str) -> Result<f64, String> {
    manifest["results"][key]
        .as_f64()
        .ok_or_else(|| format!("manifest has no numeric result {key}"))
}
