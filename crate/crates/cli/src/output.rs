//! Output emission and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gibbs_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seeds: Vec<u64>,
    pub version: &'static str,
    pub wall_clock_secs: f64,
    pub threads: usize,
    /// `sha256` of the emitted output bytes, lowercase hex.
    pub output_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::validation(format!("serialization failed: {e}")))
}

/// A rendered result plus the bookkeeping the manifest needs.
pub struct Emitted {
    pub body: String,
    pub seeds: Vec<u64>,
}

impl Emitted {
    pub fn new(body: String) -> Self {
        Emitted { body, seeds: Vec::new() }
    }

    pub fn seeded(body: String, seeds: Vec<u64>) -> Self {
        Emitted { body, seeds }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the body to `out` (or stdout) and the manifest next to it
/// (or to `manifest`, or to stderr when neither is given).
pub fn write(
    emitted: &Emitted,
    subcommand: &str,
    params: serde_json::Value,
    started: Instant,
    out: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<()> {
    let io = |e: std::io::Error| Error::validation(format!("cannot write output: {e}"));
    match out {
        Some(p) => fs::write(p, &emitted.body).map_err(io)?,
        None => print!("{}", emitted.body),
    }
    let m = RunManifest {
        subcommand: subcommand.to_string(),
        params,
        seeds: emitted.seeds.clone(),
        version: env!("CARGO_PKG_VERSION"),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        output_sha256: sha256_hex(emitted.body.as_bytes()),
    };
    let text = serde_json::to_string(&m).map_err(|e| Error::validation(e.to_string()))?;
    match manifest.map(Path::to_path_buf).or_else(|| out.map(manifest_path)) {
        Some(p) => fs::write(p, text + "\n").map_err(io)?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

/// CSV with a header row; `#` lines after the table carry summary values.
pub fn csv(header: &[&str], rows: &[Vec<String>], notes: &[(String, String)]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    for (k, v) in notes {
        s.push_str(&format!("# {k},{v}\n"));
    }
    s
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}
