//! Summary table over run artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::output::Artifact;

pub const HEADER: &str =
    "field,p,n,s_star,q_star,verdict,slice_fraction_down,slice_fraction_perp,slice_measure_down,slice_measure_perp";

/// `(field, p, n)` with `p` kept as its JSON text so keys compare exactly.
type Key = (String, String, u64);

#[derive(Debug, Default)]
struct Row {
    classify: Option<(u64, Value)>,
    slices: Option<(u64, Value)>,
}

fn keep_finest(slot: &mut Option<(u64, Value)>, refinement: u64, doc: Value) {
    if slot.as_ref().is_none_or(|(r, _)| refinement > *r) {
        *slot = Some((refinement, doc));
    }
}

/// JSON files named directly, plus every `*.json` inside named directories
/// (sorted, not recursive).
fn collect(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = vec![];
    for path in paths {
        if path.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(path)
                .with_context(|| format!("cannot list {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}

fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// Rows keyed by `(field, p, n)`; for each key the classify and slices runs
/// with the largest `refinement` are kept. Other artifact kinds are ignored.
pub fn table(paths: &[PathBuf]) -> Result<(String, usize)> {
    let mut rows: BTreeMap<Key, Row> = BTreeMap::new();
    for file in collect(paths)? {
        let doc = load(&file)?;
        let kind = doc.get("kind").and_then(Value::as_str).unwrap_or_default().to_string();
        if kind != "classify" && kind != "slices" {
            continue;
        }
        let field = doc.get("field").and_then(Value::as_str).unwrap_or_default().to_string();
        let p = cell(doc.pointer("/params/p"));
        let n = doc.pointer("/params/n").and_then(Value::as_u64).unwrap_or(0);
        let refinement = doc.get("refinement").and_then(Value::as_u64).unwrap_or(0);
        let row = rows.entry((field, p, n)).or_default();
        let slot = if kind == "classify" { &mut row.classify } else { &mut row.slices };
        keep_finest(slot, refinement, doc);
    }
    let mut csv = format!("{HEADER}\n");
    for ((field, p, n), row) in &rows {
        let c = row.classify.as_ref().map(|(_, d)| d);
        let s = row.slices.as_ref().map(|(_, d)| d);
        let get = |d: Option<&Value>, ptr: &str| cell(d.and_then(|d| d.pointer(ptr)));
        let _ = writeln!(
            csv,
            "{field},{p},{n},{},{},{},{},{},{},{}",
            get(c, "/s_star"),
            get(c, "/q_star"),
            get(c, "/verdict"),
            get(s, "/down/fraction"),
            get(s, "/perp/fraction"),
            get(s, "/down/measure"),
            get(s, "/perp/measure"),
        );
    }
    Ok((csv, rows.len()))
}

pub fn report(paths: &[PathBuf]) -> Result<Artifact> {
    let (csv, count) = table(paths)?;
    let sources: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    let json = json!({ "kind": "report", "rows": count, "sources": sources });
    Ok(Artifact::new("report", json).with_file(".csv", csv))
}
