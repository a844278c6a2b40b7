//! Machine-readable run reports and human-mode rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = "variety";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a command: the arguments it ran with,
/// digests of what it read, and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, verbatim.
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub results: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn digest_files(paths: &[PathBuf]) -> Result<Vec<InputDigest>, CliError> {
    paths.iter().map(|p| digest_file(p)).collect()
}

pub struct Output {
    pub inputs: Vec<PathBuf>,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub results: Value,
    /// Human-mode text; `None` prints `results` with 6-decimal floats.
    pub text: Option<String>,
}

impl Output {
    pub fn document(&self, command: Vec<String>) -> Result<ReportDocument, CliError> {
        Ok(ReportDocument {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            inputs: digest_files(&self.inputs)?,
            parameters: self.parameters.clone(),
            seeds: self.seeds.clone(),
            results: self.results.clone(),
        })
    }
}

/// Pretty JSON with every float written to 6 decimal places.
pub fn fixed_json(v: &Value) -> String {
    let mut out = String::new();
    write_fixed(v, 0, &mut out);
    out
}

fn write_fixed(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Number(n) if n.is_f64() => {
            let _ = write!(out, "{:.6}", n.as_f64().unwrap_or(f64::NAN));
        }
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_fixed(x, depth, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_fixed(x, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_fixed(x, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}
