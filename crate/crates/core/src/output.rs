//! CSV tables with JSON schema sidecars, and JSON documents.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips every
//! finite `f64` exactly. Writing the same table twice yields identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    /// Columns as `(name, description)`; the first row pushed fixes each column's type.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns
                .iter()
                .map(|(n, d)| Column {
                    name: n.to_string(),
                    kind: "float64",
                    description: d.to_string(),
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    /// Panics if the row width differs from the header; tables are built by this crate only.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        if self.rows.is_empty() {
            for (c, v) in self.columns.iter_mut().zip(&row) {
                c.kind = match v {
                    Cell::Int(_) => "int64",
                    Cell::Float(_) => "float64",
                };
            }
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match v {
                    Cell::Int(x) => write!(s, "{x}").unwrap(),
                    Cell::Float(x) => s.push_str(&format_float(*x)),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn schema(&self, file_name: &str) -> serde_json::Value {
        serde_json::json!({
            "file": file_name,
            "format": "csv",
            "encoding": "utf-8",
            "delimiter": ",",
            "header": true,
            "float_format": "scientific, 17 significant digits",
            "rows": self.rows.len(),
            "columns": self.columns,
        })
    }
}

/// Files written by one run, with content digests.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `name` and `name.schema.json` into `dir`, returning the CSV path.
pub fn write_table(dir: &Path, name: &str, table: &Table, manifest: &mut Manifest) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let csv = table.to_csv();
    fs::write(&path, &csv)?;
    manifest.files.push(FileRecord {
        name: name.to_string(),
        sha256: sha256_hex(csv.as_bytes()),
    });
    let schema_name = format!("{name}.schema.json");
    write_json(dir, &schema_name, &table.schema(name), manifest)?;
    Ok(path)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T, manifest: &mut Manifest) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, &text)?;
    manifest.files.push(FileRecord {
        name: name.to_string(),
        sha256: sha256_hex(text.as_bytes()),
    });
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE, 5e-324, -0.0] {
            let back: f64 = format_float(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_has_header_and_types() {
        let mut t = Table::new(&[("k", "mode"), ("n", "spectrum")]);
        t.push(vec![3usize.into(), 0.25.into()]);
        assert_eq!(t.to_csv(), "k,n\n3,2.5000000000000000e-1\n");
        assert_eq!(t.columns[0].kind, "int64");
        assert_eq!(t.schema("x.csv")["rows"], 1);
    }
}
