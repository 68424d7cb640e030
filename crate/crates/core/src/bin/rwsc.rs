use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rwsc_beam::experiment::{parse_config, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rwsc", version, about = "Adaptive beamformer comparison experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write pattern and metrics CSVs.
    Run {
        config: PathBuf,
        /// Output directory (overrides experiment.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte-Carlo runs (overrides experiment.monte_carlo_runs).
        #[arg(long)]
        runs: Option<usize>,
        /// Base RNG seed (overrides scenario.rng_seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    parse_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!(
                    "ok: M={} K={} methods={} mismatch={} deg runs={}",
                    c.geometry.num_elements(),
                    c.scenario.num_snapshots,
                    c.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
                    c.mismatch_deg,
                    c.monte_carlo_runs
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out, runs, seed } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(runs) = runs {
                cfg.monte_carlo_runs = runs;
            }
            if let Some(seed) = seed {
                cfg.scenario.rng_seed = seed;
            }
            if let Err(e) = rwsc_beam::experiment::validate(&cfg) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            let report = match run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            for m in &report.methods {
                let summary: Vec<String> = m
                    .metrics
                    .iter()
                    .map(|s| format!("{}={:.2}", s.name, s.median))
                    .collect();
                println!("{:<5} {}", m.method.as_str(), summary.join(" "));
                for (seed, err) in &m.errors {
                    eprintln!("  {} failed on seed {seed}: {err}", m.method);
                }
            }
            println!("wrote {}", cfg.output_dir.display());
            if report.total_failures() > cfg.failure_budget {
                eprintln!(
                    "error: {} solver failures exceed the budget of {}",
                    report.total_failures(),
                    cfg.failure_budget
                );
                return ExitCode::from(EXIT_SOLVER);
            }
            ExitCode::SUCCESS
        }
    }
}
