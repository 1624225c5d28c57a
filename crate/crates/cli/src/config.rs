//! Plain-text `key = value` configuration merged beneath the command line.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{usage, CliError, CliResult};

const VALUED_GLOBALS: [&str; 4] = ["--out", "--config", "--threads", "--seed"];

/// Parses `key = value` lines into `--key value` pairs. Blank lines and
/// lines starting with `#` are skipped; underscores in keys become dashes.
pub fn parse_config(text: &str) -> CliResult<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(usage(format!("config line {}: invalid key", n + 1)));
        }
        out.push(format!("--{key}").into());
        out.push(value.trim().into());
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> CliResult<Option<OsString>> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            let v = args.get(i + 1).ok_or_else(|| usage("--config needs a path"))?;
            found = Some(v.clone());
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            found = Some(v.into());
        }
        i += 1;
    }
    Ok(found)
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if VALUED_GLOBALS.contains(&a.as_ref()) {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Splices the configuration file's pairs in right after the subcommand so
/// that explicit flags, which come later, take precedence.
pub fn merge_config_args(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Io(format!("{}: {e}", Path::new(&path).display())))?;
    let extra = parse_config(&text)?;
    let Some(pos) = subcommand_position(&args) else {
        return Ok(args);
    };
    let mut merged = args[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
