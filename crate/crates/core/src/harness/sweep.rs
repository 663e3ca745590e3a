//! Cartesian-product sweeps over experiment configs.
//!
//! A sweep file holds a `[base]` experiment config and a list of axes, each
//! a dotted key into the base and the values it takes. Cells are expanded in
//! axis order (first axis slowest) and written to `<output>/<cell stem>/`.
//! `index.csv` records each cell's config hash and status; rerunning a sweep
//! skips cells whose hash is already marked done and whose files exist.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

use super::config::ExperimentConfig;
use super::table::{write_atomic, ResultTable, Value};
use super::{config_hash, run, with_workers, RunOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_name")]
    pub name: String,
    #[serde(default = "default_sweep_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub axis: Vec<SweepAxis>,
    pub base: toml::Table,
}

fn default_sweep_name() -> String {
    "sweep".into()
}

fn default_sweep_output() -> PathBuf {
    PathBuf::from("results/sweep")
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub coordinates: Vec<toml::Value>,
    pub config: ExperimentConfig,
    pub hash: String,
}

impl SweepCell {
    pub fn stem(&self) -> String {
        format!("cell{:04}_{}", self.index, &self.hash[..12])
    }
}

type IndexRows = Vec<Option<(SweepCell, CellStatus, Vec<PathBuf>)>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Done,
    Skipped,
    Failed,
}

impl CellStatus {
    fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Done => "done",
            CellStatus::Skipped => "skipped",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub cells: Vec<(SweepCell, CellStatus, Option<String>)>,
    pub index_path: PathBuf,
}

impl SweepOutcome {
    /// First failure's error, for the process exit code.
    pub fn first_error(&self) -> Option<&str> {
        self.cells.iter().find_map(|(_, _, e)| e.as_deref())
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// All cells in deterministic order, each config validated and hashed.
    pub fn expand(&self, opts: &RunOptions) -> Result<Vec<SweepCell>> {
        let output = opts.output.clone().unwrap_or_else(|| self.output.clone());
        let mut coords: Vec<Vec<toml::Value>> = vec![Vec::new()];
        for axis in &self.axis {
            if axis.values.is_empty() {
                return Err(LabError::Config(format!("axis `{}` has no values", axis.key)));
            }
            coords = coords
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push(v.clone());
                        c
                    })
                })
                .collect();
        }
        coords
            .into_iter()
            .enumerate()
            .map(|(index, coordinates)| {
                let mut table = self.base.clone();
                for (axis, value) in self.axis.iter().zip(&coordinates) {
                    set_dotted(&mut table, &axis.key, value.clone())?;
                }
                let text = toml::to_string(&table).map_err(|e| LabError::Config(e.to_string()))?;
                let mut config = ExperimentConfig::from_toml(&text)?;
                opts.apply(&mut config);
                config.output = PathBuf::new();
                let hash = config_hash(&config)?;
                let mut cell = SweepCell {
                    index,
                    coordinates,
                    config,
                    hash,
                };
                cell.config.output = output.join(cell.stem());
                Ok(cell)
            })
            .collect()
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("`{part}` in axis key `{key}` is not a table")))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn render(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Hashes recorded as done in an existing index, if any.
fn completed_hashes(index_path: &Path) -> BTreeMap<String, String> {
    let mut done = BTreeMap::new();
    let Ok(mut reader) = csv::Reader::from_path(index_path) else {
        return done;
    };
    let Ok(headers) = reader.headers().cloned() else {
        return done;
    };
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(h), Some(s), Some(f)) = (col("config_hash"), col("status"), col("tables")) else {
        return done;
    };
    for record in reader.records().flatten() {
        if matches!(record.get(s), Some("done") | Some("skipped")) {
            if let (Some(hash), Some(files)) = (record.get(h), record.get(f)) {
                done.insert(hash.to_string(), files.to_string());
            }
        }
    }
    done
}

fn index_table(sweep: &SweepConfig, rows: &IndexRows) -> Result<ResultTable> {
    let mut columns: Vec<(&str, &str)> = vec![("cell", ""), ("config_hash", "")];
    for axis in &sweep.axis {
        columns.push((axis.key.as_str(), ""));
    }
    columns.extend([("status", ""), ("tables", "")]);
    let mut table = ResultTable::new("index", &columns);
    for (cell, status, files) in rows.iter().flatten() {
        let mut row: Vec<Value> = vec![cell.index.into(), cell.hash.clone().into()];
        row.extend(cell.coordinates.iter().map(|v| Value::Text(render(v))));
        let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
        row.push(status.as_str().into());
        row.push(names.join(";").into());
        table.push(row)?;
    }
    Ok(table)
}

pub fn run_sweep(sweep: &SweepConfig, opts: &RunOptions) -> Result<SweepOutcome> {
    let output = opts.output.clone().unwrap_or_else(|| sweep.output.clone());
    std::fs::create_dir_all(&output)?;
    let index_path = output.join("index.csv");
    let cells = sweep.expand(opts)?;
    let done = completed_hashes(&index_path);
    let state: Mutex<IndexRows> = Mutex::new(vec![None; cells.len()]);
    let workers = opts.workers.or(sweep.workers);

    let record = |cell: &SweepCell, status: CellStatus, files: Vec<PathBuf>| -> Result<()> {
        let mut rows = state.lock().expect("index lock poisoned");
        rows[cell.index] = Some((cell.clone(), status, files));
        let table = index_table(sweep, &rows)?;
        write_atomic(&index_path, &table.to_csv()?)
    };

    let results: Vec<(SweepCell, CellStatus, Option<String>)> = with_workers(workers, || {
        cells
            .par_iter()
            .map(|cell| {
                if let Some(files) = done.get(&cell.hash) {
                    let paths: Vec<PathBuf> = files.split(';').filter(|s| !s.is_empty()).map(PathBuf::from).collect();
                    if !paths.is_empty() && paths.iter().all(|p| p.exists()) {
                        let r = record(cell, CellStatus::Skipped, paths);
                        return (cell.clone(), CellStatus::Skipped, r.err().map(|e| e.to_string()));
                    }
                }
                match run(&cell.config, None) {
                    Ok(out) => {
                        let r = record(cell, CellStatus::Done, out.files);
                        (cell.clone(), CellStatus::Done, r.err().map(|e| e.to_string()))
                    }
                    Err(e) => {
                        let _ = record(cell, CellStatus::Failed, Vec::new());
                        (cell.clone(), CellStatus::Failed, Some(e.to_string()))
                    }
                }
            })
            .collect()
    })?;
    let rows = state.into_inner().expect("index lock poisoned");
    let table = index_table(sweep, &rows)?;
    write_atomic(&index_path, &table.to_csv()?)?;
    write_atomic(&output.join("index.json"), &table.to_json()?)?;
    Ok(SweepOutcome {
        cells: results,
        index_path,
    })
}
