//! Result files.
//!
//! A run produces a [`Summary`]: the spec that generated it, the aggregate
//! checks with their thresholds, any anomalies, and the per-seed rows. It is
//! written as `summary.json` and `results.csv` (header [`CSV_HEADER`]).
//! Both encodings are deterministic functions of the summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{run_id_of, Check, Row};

pub const CSV_HEADER: &str = "run_id,k,N,seed,metric,value";
pub const CSV_FILE: &str = "results.csv";
pub const JSON_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            "text" => Ok(Self::Text),
            other => Err(Error::Domain(format!("unknown format {other:?} (csv, json, both, text)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub spec: serde_json::Value,
    pub results: Vec<Check>,
    #[serde(default)]
    pub anomalies: Vec<String>,
    #[serde(default)]
    pub rows: Vec<Row>,
    pub pass: bool,
}

impl Summary {
    pub fn new<S: Serialize>(spec: &S, results: Vec<Check>, anomalies: Vec<String>, rows: Vec<Row>) -> Result<Self> {
        let pass = results.iter().all(|c| c.pass) && anomalies.is_empty();
        Ok(Self {
            run_id: run_id_of(spec),
            spec: serde_json::to_value(spec)?,
            results,
            anomalies,
            rows,
            pass,
        })
    }

    /// Recomputes `pass` from the stored checks.
    pub fn consistent(&self) -> bool {
        self.pass == (self.results.iter().all(|c| c.pass) && self.anomalies.is_empty())
    }
}

pub fn render_csv(summary: &Summary) -> String {
    let mut out = String::with_capacity(64 * (summary.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &summary.rows {
        // `{}` on f64 is the shortest round-trip decimal, with a `.` separator.
        let _ = writeln!(out, "{},{},{},{},{},{}", summary.run_id, r.k, r.n, r.seed, r.metric, r.value);
    }
    out
}

pub fn render_json(summary: &Summary) -> Result<String> {
    let mut s = serde_json::to_string_pretty(summary)?;
    s.push('\n');
    Ok(s)
}

/// Human-readable table of the checks.
pub fn render_text(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run {}", summary.run_id);
    let width = summary.results.iter().map(|c| c.label().len()).max().unwrap_or(0);
    for c in &summary.results {
        let _ = writeln!(
            out,
            "{} {:<width$}  {:>12.6} {} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.label(),
            c.value,
            c.relation.symbol(),
            c.threshold,
        );
    }
    for a in &summary.anomalies {
        let _ = writeln!(out, "ANOMALY {a}");
    }
    let _ = writeln!(out, "overall: {}", if summary.pass { "PASS" } else { "FAIL" });
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the requested encodings into directory `dir`, creating it if
/// needed. Returns the files written.
pub fn emit_results(summary: &Summary, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(CSV_FILE);
        write_file(&path, &render_csv(summary))?;
        written.push(path);
    }
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(JSON_FILE);
        write_file(&path, &render_json(summary)?)?;
        written.push(path);
    }
    if format == Format::Text {
        let path = dir.join("summary.txt");
        write_file(&path, &render_text(summary))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a summary written by [`emit_results`]. `path` may be the JSON file
/// or the directory holding it.
pub fn load_summary(path: &Path) -> Result<Summary> {
    let file = if path.is_dir() { path.join(JSON_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: file.clone(),
        message: e.to_string(),
    })?;
    if !summary.consistent() {
        return Err(Error::Parse {
            path: file,
            message: "stored pass flag disagrees with the stored checks".into(),
        });
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Summary {
        let rows = vec![
            Row { k: 1, n: 10, seed: 3, metric: "sup_error".into(), value: 0.125 },
            Row { k: 0, n: 10, seed: 3, metric: "kolmogorov".into(), value: 1e-3 },
        ];
        let checks = vec![Check::at_most("x", 0.5, 1.0), Check::at_least("y", 0.5, 1.0).order(2)];
        Summary::new(&serde_json::json!({"a": 1}), checks, vec![], rows).unwrap()
    }

    #[test]
    fn csv_layout() {
        let s = sample();
        let csv = render_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], format!("{},1,10,3,sup_error,0.125", s.run_id));
        assert_eq!(lines[2], format!("{},0,10,3,kolmogorov,0.001", s.run_id));
        assert!(!csv.contains('\r'));
        assert!(!s.pass);
    }

    #[test]
    fn json_roundtrip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        let written = emit_results(&s, Format::Both, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        let first = std::fs::read(dir.path().join(CSV_FILE)).unwrap();
        emit_results(&s, Format::Both, dir.path()).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join(CSV_FILE)).unwrap());
        let back = load_summary(dir.path()).unwrap();
        assert_eq!(back, s);
        let json: serde_json::Value = serde_json::from_str(&render_json(&s).unwrap()).unwrap();
        assert_eq!(json["results"][1]["threshold"], 1.0);
        assert_eq!(json["results"][1]["relation"], "at_least");
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_summary(Path::new("/nonexistent/summary.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/summary.json"));
    }

    #[test]
    fn text_marks_failures() {
        let text = render_text(&sample());
        assert!(text.contains("FAIL y[k=2]"));
        assert!(text.ends_with("overall: FAIL\n"));
    }
}
