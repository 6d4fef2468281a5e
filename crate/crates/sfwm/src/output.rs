//! Deterministic output writers: CSV tables with fixed float formatting and
//! JSON reports with sorted keys, so identical runs produce byte-identical
//! files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// Format a float for CSV: fixed significant digits, no locale surprises.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        let s = format!("{v:.10e}");
        // Trim trailing zeros in the mantissa for readability.
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", m.trim_end_matches('0').trim_end_matches('.'), e),
            None => s,
        }
    } else {
        // NaN / inf should never reach a report; make them loud if they do.
        format!("{v}")
    }
}

/// A CSV table accumulated row by row.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(header: I) -> Self {
        CsvTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.header.len(),
            "row width must match header"
        );
        self.rows.push(cells);
    }

    pub fn to_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.to_string().as_bytes())
    }
}

/// Serialize a JSON value with sorted keys at every level.
pub fn canonical_json(value: &Value) -> String {
    fn sort(value: &Value) -> Value {
        match value {
            Value::Object(map) => {
                let mut sorted = Map::new();
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                for k in keys {
                    sorted.insert(k.clone(), sort(&map[k]));
                }
                Value::Object(sorted)
            }
            Value::Array(items) => Value::Array(items.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    let mut text = serde_json::to_string_pretty(&sort(value)).expect("JSON serialization");
    text.push('\n');
    text
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    write_atomic(path, canonical_json(value).as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
    }
    fs::rename(&tmp, path)
}

/// Files written by one command invocation.
#[derive(Debug, Default)]
pub struct WrittenFiles {
    pub paths: Vec<PathBuf>,
}

impl WrittenFiles {
    pub fn add(&mut self, path: PathBuf) {
        self.paths.push(path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1.0), "1e0");
        assert_eq!(fmt_float(-0.25), "-2.5e-1");
        assert_eq!(fmt_float(676.116478), "6.76116478e2");
    }

    #[test]
    fn json_keys_are_sorted() {
        let v = json!({"b": 1, "a": {"z": 2, "y": [ {"q": 3, "p": 4} ]}});
        let text = canonical_json(&v);
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        let p = text.find("\"p\"").unwrap();
        let q = text.find("\"q\"").unwrap();
        assert!(a < b && p < q);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CsvTable::new(["x", "y"]);
        t.push_row(vec![fmt_float(1.5), fmt_float(2.0)]);
        assert_eq!(t.to_string(), "x,y\n1.5e0,2e0\n");
    }
}
