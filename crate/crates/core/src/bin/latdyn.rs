use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use latdyn::hamiltonians::model_catalog;
use latdyn::harness::config::Precision;
use latdyn::harness::sweep::{run_sweep, SweepConfig};
use latdyn::harness::verify::run_suite;
use latdyn::harness::{run_path, RunOptions};
use latdyn::LabError;

#[derive(Debug, Parser)]
#[command(name = "latdyn", version, about = "Lattice dynamics experiments on finite quantum spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// Output directory (overrides the config).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, short = 'j')]
    workers: Option<usize>,
    /// `double` or `exact`.
    #[arg(long)]
    precision: Option<Precision>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn options(&self) -> RunOptions {
        RunOptions {
            output: self.out.clone(),
            workers: self.workers,
            precision: self.precision,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        #[arg(long, short = 'c')]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every cell of a sweep config.
    Sweep {
        #[arg(long, short = 'c')]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a named check suite (default: acceptance).
    Verify {
        #[arg(default_value = "acceptance")]
        suite: String,
        #[arg(long, short = 'j')]
        workers: Option<usize>,
    },
    /// List built-in models.
    ListModels,
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn execute(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Run { config, overrides } => match run_path(&config, &overrides.options()) {
            Ok(out) => {
                for f in &out.files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Sweep { config, overrides } => {
            let result = SweepConfig::load(&config).and_then(|s| run_sweep(&s, &overrides.options()));
            match result {
                Ok(outcome) => {
                    for (cell, status, err) in &outcome.cells {
                        match err {
                            Some(e) => println!("{} {status:?}: {e}", cell.stem()),
                            None => println!("{} {status:?}", cell.stem()),
                        }
                    }
                    println!("{}", outcome.index_path.display());
                    if outcome.first_error().is_some() {
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify { suite, workers } => {
            let result = latdyn::harness::with_workers(workers, || run_suite(&suite)).and_then(|r| r);
            match result {
                Ok(checks) => {
                    for c in &checks {
                        println!("{c}");
                    }
                    let failed = checks.iter().filter(|c| !c.passed).count();
                    println!("{} checks, {failed} failed", checks.len());
                    if failed == 0 {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::ListModels => {
            for (name, description) in model_catalog() {
                println!("{name:<16} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn main() -> ExitCode {
    execute(Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> ExitCode {
        let mut full = vec!["latdyn"];
        full.extend_from_slice(args);
        execute(Cli::try_parse_from(full).unwrap())
    }

    fn write(dir: &std::path::Path, name: &str, text: &str) -> String {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path.display().to_string()
    }

    #[test]
    fn run_writes_tables_and_mirror() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "a.toml", "kind = \"twist_covariance\"\n[geometry]\nsites = 4\n");
        let out = dir.path().join("out");
        assert_eq!(exec(&["run", "-c", &cfg, "--out", out.to_str().unwrap()]), ExitCode::SUCCESS);
        let csv = std::fs::read_to_string(out.join("twist_covariance_twist_covariance.csv")).unwrap();
        assert!(csv.starts_with("schema_version,model,d,sites,g,defect\n"));
        assert!(out.join("twist_covariance_twist_covariance.json").exists());
        assert!(out.join("twist_covariance.config.toml").exists());
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad.toml", "kind = \"light_cone\"\ncolour = 1\n[geometry]\nsites = 4\n");
        assert_eq!(exec(&["run", "-c", &bad]), ExitCode::from(2));
        let missing = dir.path().join("missing.toml");
        assert_eq!(exec(&["run", "-c", missing.to_str().unwrap()]), ExitCode::from(2));
        let big = write(
            dir.path(),
            "big.toml",
            "kind = \"spectrum\"\n[geometry]\nsites = 7\n",
        );
        let out = dir.path().join("o");
        assert_eq!(exec(&["run", "-c", &big, "-o", out.to_str().unwrap()]), ExitCode::from(3));
        assert_eq!(exec(&["verify", "no_such_suite"]), ExitCode::from(2));
    }

    #[test]
    fn seed_and_precision_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "p.toml", "kind = \"projector_dynamics\"\n[geometry]\nsites = 3\n");
        let out = dir.path().join("p");
        let code = exec(&[
            "run", "-c", &cfg, "-o", out.to_str().unwrap(), "--precision", "exact", "--seed", "9",
        ]);
        assert_eq!(code, ExitCode::SUCCESS);
        let resolved = std::fs::read_to_string(out.join("projector_dynamics.config.toml")).unwrap();
        assert!(resolved.contains("precision = \"exact\""));
        assert!(resolved.contains("seed = 9"));
    }

    #[test]
    fn sweep_and_list_models() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "s.toml",
            "[[axis]]\nkey = \"geometry.sites\"\nvalues = [4, 5]\n[base]\nkind = \"twist_covariance\"\n[base.geometry]\nsites = 4\n",
        );
        let out = dir.path().join("s");
        assert_eq!(exec(&["sweep", "-c", &cfg, "-o", out.to_str().unwrap(), "-j", "2"]), ExitCode::SUCCESS);
        let index = std::fs::read_to_string(out.join("index.csv")).unwrap();
        assert_eq!(index.lines().count(), 3);
        assert_eq!(exec(&["list-models"]), ExitCode::SUCCESS);
        assert_eq!(exec(&["verify", "weyl"]), ExitCode::SUCCESS);
    }
}
