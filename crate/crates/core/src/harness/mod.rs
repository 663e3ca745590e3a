//! Declarative experiment runner: configs in, deterministic tables out.

pub mod config;
pub mod experiments;
pub mod sweep;
pub mod table;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use config::{ExperimentConfig, Precision};
use table::{write_atomic, Provenance, ResultTable};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub precision: Option<Precision>,
    pub seed: Option<u64>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config_hash: String,
    pub tables: Vec<ResultTable>,
    pub files: Vec<PathBuf>,
}

/// SHA-256 of the fully defaulted TOML form.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(hex::encode(Sha256::digest(cfg.to_toml()?.as_bytes())))
}

/// Runs `f` on a dedicated pool when a worker count is given.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| LabError::InvalidArgument(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Computes all tables for `cfg` and writes them under `cfg.output` as
/// `<name>_<table>.csv` / `.json`, plus the resolved config.
pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    let hash = config_hash(cfg)?;
    let start = Instant::now();
    let mut tables = with_workers(workers, || experiments::run_experiment(cfg))??;
    let wall = start.elapsed().as_secs_f64();
    let provenance = Provenance {
        config_hash: hash.clone(),
        code_version: CODE_VERSION.to_string(),
        experiment: cfg.kind.as_str().to_string(),
        seed: cfg.seed,
        wall_time_s: wall,
    };
    let mut files = Vec::new();
    std::fs::create_dir_all(&cfg.output)?;
    let config_path = cfg.output.join(format!("{}.config.toml", cfg.name));
    write_atomic(&config_path, cfg.to_toml()?.as_bytes())?;
    files.push(config_path);
    for t in tables.iter_mut() {
        t.provenance = Some(provenance.clone());
        let (csv, json) = t.write(&cfg.output, &format!("{}_{}", cfg.name, t.name))?;
        files.push(csv);
        files.push(json);
    }
    Ok(RunOutput {
        config_hash: hash,
        tables,
        files,
    })
}

/// Loads, overrides, validates, and runs a config file.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunOutput> {
    let mut cfg = ExperimentConfig::load(path)?;
    opts.apply(&mut cfg);
    cfg.validate()?;
    run(&cfg, opts.workers)
}
