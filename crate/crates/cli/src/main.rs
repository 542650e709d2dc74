use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mblq_cli::{run_experiment, validate_config, ExperimentConfig, ExperimentKind, RunManifest};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    LevelStats,
    CueCheck,
    SupremacyCurve,
    Memory,
    MakeDataset,
    Train,
    WSweep,
}

impl Kind {
    fn experiment(self) -> ExperimentKind {
        match self {
            Kind::LevelStats => ExperimentKind::LevelStats,
            Kind::CueCheck => ExperimentKind::CueCheck,
            Kind::SupremacyCurve => ExperimentKind::SupremacyCurve,
            Kind::Memory => ExperimentKind::Memory,
            Kind::MakeDataset => ExperimentKind::MakeDataset,
            Kind::Train => ExperimentKind::Train,
            Kind::WSweep => ExperimentKind::WSweep,
        }
    }
}

/// Quenched driven Ising chain experiments.
#[derive(Debug, Parser)]
#[command(name = "mblq", version)]
struct Cli {
    /// Experiment to run; must match `kind` in the config.
    kind: Kind,
    /// TOML config, or a `manifest.json` from an earlier run to replay it.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    emit_plots: bool,
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if path.extension().is_some_and(|x| x == "json") {
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        manifest.config.check().map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(manifest.config);
    }
    validate_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut config = match load(&cli.config) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("config error: {message}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if config.kind != cli.kind.experiment() {
        eprintln!(
            "config error: command is `{}` but the config says kind = \"{}\"",
            cli.kind.experiment(),
            config.kind
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    config.emit_plots |= cli.emit_plots;

    let mut pool = rayon::ThreadPoolBuilder::new();
    match cli.workers {
        Some(0) => {
            eprintln!("config error: --workers must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        Some(n) => pool = pool.num_threads(n),
        None => {}
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match pool.install(|| run_experiment(&config)) {
        Ok(manifest) => {
            eprintln!(
                "{}: wrote {} files to {} in {:.1} s",
                config.kind,
                manifest.outputs.len(),
                config.output_dir.display(),
                manifest.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.error);
            if failure.manifest.is_some() {
                eprintln!("partial results recorded in {}", config.output_dir.join("manifest.json").display());
            }
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
