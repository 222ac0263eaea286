//! CSV and manifest writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits). The first CSV
//! line is `# manifest_sha256=<hex>`, the digest of the manifest file bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Field {
    fn render(&self, out: &mut String) {
        match self {
            Field::Num(v) if v.is_nan() => out.push_str("nan"),
            Field::Num(v) => {
                let _ = write!(out, "{v:.16e}");
            }
            Field::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Field::Text(s) => out.push_str(s),
        }
    }
}

pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<Field>;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub enforced: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, enforced: false, detail }
    }
}

/// Canonical manifest bytes: pretty JSON with a trailing newline.
pub fn manifest_bytes(manifest: &serde_json::Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(manifest)?;
    b.push(b'\n');
    Ok(b)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn render_csv<R: CsvRow>(rows: &[R], manifest_hash: &str) -> String {
    let mut out = format!("# manifest_sha256={manifest_hash}\n");
    out.push_str(&R::header().join(","));
    out.push('\n');
    for row in rows {
        for (k, f) in row.fields().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            f.render(&mut out);
        }
        out.push('\n');
    }
    out
}

/// Writes the manifest and the CSV; returns the manifest hash.
pub fn write_outputs<R: CsvRow>(
    csv_path: &Path,
    manifest_path: &Path,
    rows: &[R],
    manifest: &serde_json::Value,
) -> Result<String> {
    let bytes = manifest_bytes(manifest)?;
    let hash = sha256_hex(&bytes);
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(manifest_path, &bytes).with_context(|| format!("writing {}", manifest_path.display()))?;
    std::fs::write(csv_path, render_csv(rows, &hash)).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(hash)
}
