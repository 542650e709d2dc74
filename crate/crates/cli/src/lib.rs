//! Reproduction harness around `mblq`: configuration, experiment pipelines,
//! checkpoints, CSV/JSON/SVG outputs and run manifests.

pub mod checkpoint;
pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;

use std::any::Any;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use mblq::seed::SeedTree;
use thiserror::Error;

pub use config::{validate_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use output::{RunManifest, RunStatus};

use experiments::Context;
use output::{OutputSet, MANIFEST_SCHEMA};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Model(#[from] mblq::Error),
    #[error("worker panicked: {0}")]
    Panic(String),
}

/// A failed run, with the manifest of whatever was written before the
/// failure (absent when the output directory itself is unusable).
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: RunError,
    pub manifest: Option<RunManifest>,
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs `config` on the current rayon pool and writes outputs plus
/// `manifest.json` to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, RunFailure> {
    let start = Instant::now();
    let mut out = OutputSet::create(&config.output_dir).map_err(|e| RunFailure {
        error: e.into(),
        manifest: None,
    })?;
    let mut ctx = Context {
        config,
        root: SeedTree::new(config.master_seed),
        out: &mut out,
        seeds: Vec::new(),
    };
    let result = catch_unwind(AssertUnwindSafe(|| experiments::dispatch(&mut ctx)))
        .unwrap_or_else(|payload| Err(RunError::Panic(panic_message(payload))));
    let seeds = std::mem::take(&mut ctx.seeds);
    let status = match &result {
        Ok(()) => RunStatus::Complete,
        Err(e) => RunStatus::Failed { message: e.to_string() },
    };
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        workers: rayon::current_num_threads(),
        derived_seeds: seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: out.into_records(),
        status,
    };
    let written = manifest.write(&config.output_dir);
    match (result, written) {
        (Ok(()), Ok(())) => Ok(manifest),
        (Ok(()), Err(e)) => Err(RunFailure {
            error: e.into(),
            manifest: Some(manifest),
        }),
        (Err(error), _) => Err(RunFailure {
            error,
            manifest: Some(manifest),
        }),
    }
}
