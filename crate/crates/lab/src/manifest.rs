//! `manifest.json`: what was run, with which inputs, and how long it took.
//!
//! The manifest is written before a command produces anything and updated
//! when it finishes. It is the only output that holds timing, so every other
//! file stays byte-for-byte reproducible.

use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::formats::{read_json, write_json};
use crate::LabError;

pub const FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, LabError> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn load(out: &Path) -> Result<Map<String, Value>, LabError> {
    let path = out.join(FILE);
    if !path.exists() {
        return Ok(Map::new());
    }
    match read_json(&path)? {
        Value::Object(m) => Ok(m),
        _ => Err(LabError::Format(format!("{}: not an object", path.display()))),
    }
}

fn store(out: &Path, command: &str, entry: Value) -> Result<(), LabError> {
    let mut m = load(out)?;
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    let commands = m.entry("commands").or_insert_with(|| json!({}));
    if !commands.is_object() {
        *commands = json!({});
    }
    commands[command] = entry;
    write_json(&out.join(FILE), &Value::Object(m))
}

/// Records `command` and its inputs as running.
pub fn begin(out: &Path, command: &str, inputs: Value) -> Result<(), LabError> {
    store(out, command, json!({ "status": "running", "inputs": inputs }))
}

/// Marks `command` finished, with its wall time and output digests.
pub fn finish(out: &Path, command: &str, inputs: Value, elapsed_ms: u128, outputs: &[&Path]) -> Result<(), LabError> {
    let mut digests = Map::new();
    for path in outputs {
        let name = path.strip_prefix(out).unwrap_or(path).to_string_lossy().replace('\\', "/");
        digests.insert(name, json!(sha256_file(path)?));
    }
    store(
        out,
        command,
        json!({
            "status": "complete",
            "inputs": inputs,
            "elapsed_ms": elapsed_ms as u64,
            "outputs_sha256": digests,
        }),
    )
}
