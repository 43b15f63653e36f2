//! Result files: JSON-lines records, JSON summaries and CSV plot data.
//!
//! Every file starts with the config hash and code version: a header object
//! on the first JSONL line, a `meta` field in JSON documents, a `#` comment
//! line in CSV files. Floats use the shortest round-trip representation.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self { config_hash: config_hash.into(), code_version: crate::CODE_VERSION.to_string() }
    }
}

#[derive(Serialize)]
struct Document<'a, T> {
    meta: &'a Provenance,
    result: &'a T,
}

pub fn jsonl_string<T: Serialize>(meta: &Provenance, records: &[T]) -> Result<String> {
    let mut out = serde_json::to_string(meta)?;
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn json_string<T: Serialize>(meta: &Provenance, value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(&Document { meta, result: value })?;
    out.push('\n');
    Ok(out)
}

pub fn csv_string(meta: &Provenance, body: &str) -> String {
    format!("# config_hash={} code_version={}\n{body}", meta.config_hash, meta.code_version)
}

/// Fraction curves as `x,<name_1>,<name_2>,...` rows.
pub fn curves_csv(x_label: &str, xs: &[usize], curves: &[(&str, &[f64])]) -> String {
    let mut out = String::from(x_label);
    for (name, _) in curves {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (row, x) in xs.iter().enumerate() {
        out.push_str(&x.to_string());
        for (_, values) in curves {
            out.push(',');
            out.push_str(&values[row].to_string());
        }
        out.push('\n');
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents.as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, meta: &Provenance, records: &[T]) -> Result<()> {
    write_atomic(path, &jsonl_string(meta, records)?)
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Provenance, value: &T) -> Result<()> {
    write_atomic(path, &json_string(meta, value)?)
}

pub fn write_csv(path: &Path, meta: &Provenance, body: &str) -> Result<()> {
    write_atomic(path, &csv_string(meta, body))
}

/// Reads a JSON document written by [`write_json`], returning its payload.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Provenance, T)> {
    #[derive(Deserialize)]
    struct Owned<T> {
        meta: Provenance,
        result: T,
    }
    let text = fs::read_to_string(path)?;
    let doc: Owned<T> = serde_json::from_str(&text)?;
    Ok((doc.meta, doc.result))
}

/// Reads a JSONL file written by [`write_jsonl`]: header, then records.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Provenance, Vec<T>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| crate::Error::invalid(format!("{} is empty", path.display())))?;
    let meta: Provenance = serde_json::from_str(header)?;
    let records = lines.map(serde_json::from_str).collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((meta, records))
}
