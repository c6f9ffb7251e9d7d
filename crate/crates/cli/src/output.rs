//! Artifacts: the JSON report printed on stdout plus files written to the
//! output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    VerdictFailure,
}

#[derive(Debug)]
pub struct Artifact {
    /// File stem shared by every file of the run.
    pub stem: String,
    pub json: Value,
    /// Extra files as `(suffix, contents)`, e.g. `(".csv", ..)`.
    pub files: Vec<(String, String)>,
    pub status: Status,
}

impl Artifact {
    pub fn new(stem: impl Into<String>, json: Value) -> Self {
        Self {
            stem: sanitize(&stem.into()),
            json,
            files: vec![],
            status: Status::Pass,
        }
    }

    pub fn with_file(mut self, suffix: &str, contents: String) -> Self {
        self.files.push((suffix.to_string(), contents));
        self
    }

    pub fn failing_if(mut self, fail: bool) -> Self {
        if fail {
            self.status = Status::VerdictFailure;
        }
        self
    }

    /// Writes `<stem>.json` and the extra files; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let mut written = vec![];
        let mut put = |name: String, body: &str| -> Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
            Ok(())
        };
        put(format!("{}.json", self.stem), &pretty(&self.json))?;
        for (suffix, body) in &self.files {
            put(format!("{}{}", self.stem, suffix), body)?;
        }
        Ok(written)
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn sanitize(stem: &str) -> String {
    stem.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// `inf`, `-inf` and `nan` as strings, finite values as numbers.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// Gnuplot-ready data: a `#` header naming the columns, then one
/// whitespace-separated row per record. Blank lines separate blocks.
pub struct Dat {
    text: String,
}

impl Dat {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            text: format!("# {}\n", columns.join(" ")),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(self.text, "{}", cells.join(" "));
    }

    pub fn blank(&mut self) {
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(num(1.5), Value::from(1.5));
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(num(f64::NAN), Value::from("nan"));
    }

    #[test]
    fn dat_layout() {
        let mut d = Dat::new(&["x", "value"]);
        d.row(&[0.5, 2.0]);
        d.blank();
        d.row(&[1.0, 1e-20]);
        assert_eq!(d.finish(), "# x value\n0.5 2\n\n1 0.00000000000000000001\n");
    }

    #[test]
    fn stems_are_file_safe() {
        assert_eq!(sanitize("classify-truncated(barenblatt, 5)"), "classify-truncated_barenblatt__5_");
    }
}
