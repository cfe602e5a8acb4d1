//! escape-lab: growth profiling, connectedness certificates and escape-set
//! grids for entire functions of small order.
//!
//! One JSON config per run selects the function, the command and its
//! parameters; see the repository README for the format. Exit codes:
//! 0 success (including negative results such as an unverified
//! certificate), 2 validation error, 3 computation error.

// validation deliberately uses `!(x > y)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use runner::RunError;

#[derive(Parser, Debug)]
#[command(name = "escape-lab", version, about)]
struct Args {
    /// Path to the run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (default: hardware parallelism, or the
    /// ESCAPE_LAB_THREADS environment variable).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config: RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config does not parse: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Err(e) = config.validate() {
        eprintln!("error: invalid config: {e}");
        return ExitCode::from(2);
    }

    let threads = args
        .threads
        .or_else(|| {
            std::env::var("ESCAPE_LAB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(3);
        }
    };

    // modules receive the pool as the ambient capability of this scope and
    // never build their own
    match pool.install(|| runner::run(&config, threads, args.verbose)) {
        Ok(files) => {
            if args.verbose {
                eprintln!(
                    "{} files written to {}",
                    files.len(),
                    config.output_dir.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Computation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
