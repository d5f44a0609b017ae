//! CSV tables, JSON reports and artifact validation.

use serde_json::{Map, Value};
use std::path::Path;

/// Column kinds of an emitted table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    /// 17 significant digits.
    Float,
    Int,
    Text,
    /// Float or empty.
    OptFloat,
    /// Int or empty.
    OptInt,
    /// Text or empty.
    OptText,
}

pub struct Schema {
    pub file: &'static str,
    pub columns: &'static [(&'static str, Col)],
}

use Col::*;

pub const SCHEMAS: &[Schema] = &[
    Schema {
        file: "spectrum.csv",
        columns: &[
            ("re", Float),
            ("im", Float),
            ("status", Text),
            ("j", OptInt),
            ("branch", OptText),
            ("analytic", OptFloat),
            ("error", OptFloat),
            ("residual", OptFloat),
        ],
    },
    Schema { file: "gauge.csv", columns: &[("rho", Float), ("g1", Float), ("g2", Float), ("gstar1", Float), ("gstar2", Float)] },
    Schema {
        file: "trajectory.csv",
        columns: &[("tau", Float), ("norm", Float), ("gauge_norm", Float), ("stable_norm", Float)],
    },
    Schema {
        file: "compare.csv",
        columns: &[
            ("tau", Float),
            ("similarity_norm", Float),
            ("physical_norm", Float),
            ("difference", Float),
            ("relative", Float),
        ],
    },
    Schema { file: "growth.csv", columns: &[("tau", Float), ("uncorrected_norm", Float), ("corrected_norm", Float)] },
    Schema { file: "cone.csv", columns: &[("tau", Float), ("rho", Float), ("phi1", Float), ("phi2", Float)] },
    Schema {
        file: "hardy.csv",
        columns: &[
            ("suite", Text),
            ("name", Text),
            ("train", Int),
            ("validation", Int),
            ("training_max", Float),
            ("constant", Float),
            ("validation_max", Float),
            ("failures", Int),
        ],
    },
    Schema { file: "blowup.csv", columns: &[("t", Float), ("sup", Float)] },
    Schema { file: "snapshots.csv", columns: &[("t", Float), ("r", Float), ("phi_tilde", Float), ("phi_tilde_t", Float)] },
];

pub fn schema(file: &str) -> Option<&'static Schema> {
    SCHEMAS.iter().find(|s| s.file == file)
}

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    T(String),
    Empty,
}

/// 17 significant digits, '.' decimal, exponent form.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // Rust spells these NaN, inf, -inf; all parse back as f64
        format!("{v}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::T(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub fn write_csv(dir: &Path, file: &str, rows: impl IntoIterator<Item = Vec<Cell>>) -> std::io::Result<()> {
    let schema = schema(file).expect("every emitted table has a schema");
    let mut w = csv::Writer::from_path(dir.join(file))?;
    w.write_record(schema.columns.iter().map(|c| c.0))?;
    for row in rows {
        debug_assert_eq!(row.len(), schema.columns.len());
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()
}

/// Keys every report carries.
pub const REPORT_KEYS: &[&str] = &["command", "status", "inputs", "resolved", "results", "timestamp"];

pub fn timestamp() -> String {
    let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}

pub fn write_report(dir: &Path, report: &Map<String, Value>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)
}

fn is_float_17(s: &str) -> bool {
    if matches!(s, "NaN" | "inf" | "-inf") {
        return true;
    }
    let Some((mantissa, exp)) = s.split_once('e') else {
        return false;
    };
    let digits = mantissa.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).count();
    digits == 17 && exp.parse::<i32>().is_ok() && s.parse::<f64>().is_ok()
}

fn check_cell(col: Col, s: &str) -> bool {
    match col {
        Float => is_float_17(s),
        Int => s.parse::<i64>().is_ok(),
        Text => !s.is_empty(),
        OptFloat => s.is_empty() || is_float_17(s),
        OptInt => s.is_empty() || s.parse::<i64>().is_ok(),
        OptText => true,
    }
}

/// Checks one emitted table against its schema; returns the problems found.
pub fn validate_csv(path: &Path, schema: &Schema) -> Vec<String> {
    let mut problems = Vec::new();
    let mut rdr = match csv::Reader::from_path(path) {
        Ok(r) => r,
        Err(e) => return vec![format!("{}: {e}", schema.file)],
    };
    match rdr.headers() {
        Ok(h) => {
            let want: Vec<&str> = schema.columns.iter().map(|c| c.0).collect();
            let got: Vec<&str> = h.iter().collect();
            if got != want {
                problems.push(format!("{}: header {got:?}, expected {want:?}", schema.file));
                return problems;
            }
        }
        Err(e) => return vec![format!("{}: {e}", schema.file)],
    }
    for (i, rec) in rdr.records().enumerate() {
        match rec {
            Ok(rec) => {
                for ((name, col), cell) in schema.columns.iter().zip(rec.iter()) {
                    if !check_cell(*col, cell) {
                        problems.push(format!("{} row {}: column {name} has invalid value \"{cell}\"", schema.file, i + 1));
                    }
                }
            }
            Err(e) => problems.push(format!("{} row {}: {e}", schema.file, i + 1)),
        }
    }
    problems
}

pub fn validate_report(path: &Path) -> Vec<String> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return vec![format!("report.json: {e}")],
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return vec![format!("report.json: {e}")],
    };
    let Some(obj) = value.as_object() else {
        return vec!["report.json: not a JSON object".into()];
    };
    REPORT_KEYS.iter().filter(|k| !obj.contains_key(**k)).map(|k| format!("report.json: missing key `{k}`")).collect()
}

/// Validates every recognized artifact in `dir`. Returns (files checked, problems).
pub fn validate_dir(dir: &Path) -> std::io::Result<(Vec<String>, Vec<String>)> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    let mut checked = Vec::new();
    let mut problems = Vec::new();
    for name in names {
        let path = dir.join(&name);
        if name == "report.json" {
            problems.extend(validate_report(&path));
            checked.push(name);
        } else if let Some(s) = schema(&name) {
            problems.extend(validate_csv(&path, s));
            checked.push(name);
        }
    }
    if !checked.iter().any(|n| n == "report.json") {
        problems.push("report.json: missing".into());
    }
    Ok((checked, problems))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for v in [0.1, -1.0 / 3.0, 6.02e23, 5e-324, 0.0, -0.0] {
            let s = fmt_float(v);
            assert!(is_float_17(&s), "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert!(!is_float_17("0.1"));
        assert!(!is_float_17("1.5e0"));
    }

    #[test]
    fn csv_validation_flags_bad_cells() {
        let dir = std::env::temp_dir().join(format!("blowup-lab-output-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        write_csv(&dir, "blowup.csv", vec![vec![Cell::F(0.5), Cell::F(2.0)]]).unwrap();
        assert!(validate_csv(&dir.join("blowup.csv"), schema("blowup.csv").unwrap()).is_empty());
        std::fs::write(dir.join("blowup.csv"), "t,sup\n0.5,2\n").unwrap();
        assert_eq!(validate_csv(&dir.join("blowup.csv"), schema("blowup.csv").unwrap()).len(), 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
