//! Batch front-end for `multibump`: a JSON run configuration selects one
//! command, and the run writes `manifest.json`, CSV series and a JSON-lines
//! log into an output directory.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{Command, RunConfig};
pub use error::CliError;
pub use plot::{emit_plot_data, PlotKind, PlotReport};
pub use run::{config_from_manifest, run, RunOutput};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MULTIBUMP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "multibump",
    version,
    about = "Multi-bump solutions of coupled Schrodinger systems"
)]
pub struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for optimizer restarts; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Progress messages on stderr.
    #[arg(long)]
    pub verbose: bool,
}

/// Sizes the global thread pool from [`THREADS_ENV`] if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Parse(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Parse(format!("{THREADS_ENV} must be positive")));
    }
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Loads the config, applies the command-line overrides and runs it.
/// Returns the effective output directory alongside the result.
pub fn execute(args: &Args) -> (Option<PathBuf>, Result<RunOutput, CliError>) {
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return (args.out.clone(), Err(e)),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    let Some(out) = cfg.output_dir.clone() else {
        let e = CliError::Validation("no output directory: pass --out or set `output_dir`".into());
        return (None, Err(e));
    };
    let result = run(&cfg, Path::new(&out), args.verbose);
    (Some(out), result)
}
