use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use driftfilter::cli::{resolve_config, run, ExperimentKind};
use driftfilter::Error;

/// Drift filtering, covariance analysis and log-utility portfolio evaluation
/// for a market with an unobserved Ornstein-Uhlenbeck drift and discrete
/// expert opinions.
#[derive(Parser, Debug)]
#[command(name = "driftfilter", version, about)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentKind,

    /// Path to a JSON configuration, or the name of a bundled one
    /// (example31, example45, example46, example49, example61, example62).
    #[arg(long)]
    config: String,

    /// Override the configuration's random seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the configuration's grid step.
    #[arg(long)]
    step: Option<f64>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Compare results against the bundled reference values; exit 4 on
    /// mismatch.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match resolve_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(step) = args.step {
        config.grid_step = step;
    }
    if let Some(out) = args.out {
        config.out_dir = Some(out);
    }

    match run(args.experiment, &config, args.check) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for path in &summary.outputs {
                println!("wrote {}", path.display());
            }
            if !summary.check_failures.is_empty() {
                for f in &summary.check_failures {
                    eprintln!("check failed: {f}");
                }
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Io(_) | Error::Json(_) => ExitCode::from(1),
                _ => ExitCode::from(3),
            }
        }
    }
}
