//! Configuration-driven runner for the riemlab engines.

pub mod config;
pub mod reports;
pub mod scenario;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{load_config, ScenarioConfig};
pub use scenario::{run_scenario, Outcome, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse {path}: {reason}")]
    ParseError { path: String, reason: String },

    #[error("invalid value for `{key}`: {reason}")]
    SchemaError { key: String, reason: String },

    #[error("unknown manifold family `{0}`")]
    UnknownFamily(String),

    #[error(transparent)]
    Model(#[from] riemlab::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

/// Loads and runs every config on a pool of `jobs` threads, in input order.
pub fn run_many(paths: &[PathBuf], out_dir: &Path, jobs: usize) -> Result<Vec<Result<RunSummary, CliError>>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(|| {
        paths
            .par_iter()
            .map(|p| load_config(p).and_then(|cfg| run_scenario(&cfg, out_dir)))
            .collect()
    }))
}

/// Exit status for a batch: any failure wins over any singularity.
pub fn batch_exit_code(results: &[Result<RunSummary, CliError>]) -> i32 {
    results
        .iter()
        .map(|r| r.as_ref().map_or(Outcome::Failed, |s| s.outcome))
        .max()
        .unwrap_or(Outcome::Smooth)
        .exit_code()
}
