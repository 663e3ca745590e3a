//! Tabular results: CSV (primary) plus a JSON mirror with provenance.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::C64;

/// Bumped whenever a column set or meaning changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Real(x) if x.is_nan() => "nan".into(),
            Value::Real(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Value::Real(x) => format!("{x:?}"),
            Value::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Text(b.to_string())
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub experiment: String,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    pub provenance: Option<Provenance>,
}

#[derive(Serialize)]
struct JsonMirror<'a> {
    schema_version: u32,
    name: &'a str,
    columns: &'a [Column],
    rows: &'a [Vec<Value>],
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a Provenance>,
}

impl ResultTable {
    /// Columns as `(name, unit)`; use an empty unit for dimensionless or text columns.
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
            provenance: None,
        }
    }

    /// `name_re`, `name_im` column pair for a complex quantity.
    pub fn complex_columns(name: &str, unit: &str) -> [(String, String); 2] {
        [(format!("{name}_re"), unit.to_string()), (format!("{name}_im"), unit.to_string())]
    }

    pub fn with_complex(name: &str, columns: &[(&str, &str)], complex: &[(&str, &str)]) -> Self {
        let mut table = Self::new(name, columns);
        for (n, u) in complex {
            for (cn, cu) in Self::complex_columns(n, u) {
                table.columns.push(Column { name: cn, unit: cu });
            }
        }
        table
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(LabError::Invariant(format!(
                "table {} has {} columns, row has {}",
                self.name,
                self.columns.len(),
                row.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_values(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn real_column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_values(name)?
            .into_iter()
            .map(|v| match v {
                Value::Real(x) => Some(*x),
                Value::Int(i) => Some(*i as f64),
                Value::Text(_) => None,
            })
            .collect()
    }

    /// UTF-8 CSV with a header row; the first column is `schema_version`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["schema_version".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        let version = SCHEMA_VERSION.to_string();
        for row in &self.rows {
            let mut record = vec![version.clone()];
            record.extend(row.iter().map(Value::render));
            w.write_record(&record)?;
        }
        w.into_inner().map_err(|e| LabError::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mirror = JsonMirror {
            schema_version: SCHEMA_VERSION,
            name: &self.name,
            columns: &self.columns,
            rows: &self.rows,
            provenance: self.provenance.as_ref(),
        };
        let mut out = serde_json::to_vec_pretty(&mirror)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json` atomically.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        write_atomic(&csv_path, &self.to_csv()?)?;
        write_atomic(&json_path, &self.to_json()?)?;
        Ok((csv_path, json_path))
    }
}

pub fn complex_cells(z: C64) -> [Value; 2] {
    [Value::Real(z.re), Value::Real(z.im)]
}

/// Writes to a sibling temporary file, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| LabError::InvalidArgument(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{file_name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
