use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use hqcrc::experiment::{self, ExperimentConfig};
use hqcrc::reservoir::{ProbeOptions, ReservoirMode};
use hqcrc::Error;

/// Hybrid quantum-classical reservoir computing experiments.
#[derive(Parser)]
#[command(name = "hqcrc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seed × mode forecasting sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Inclusive seed range `k..m` (or a single seed), overriding the config.
        #[arg(long, value_parser = parse_seed_range)]
        seeds: Option<SeedRange>,
        /// Restrict to one mode: hybrid, classical_only, quantum_only, standard_esn.
        #[arg(long)]
        mode: Option<ReservoirMode>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write forecast_{x,y,z}.svg.
        #[arg(long)]
        emit_plots: bool,
    },
    /// Print single- and two-qubit feature-map curves as CSV.
    DemoFeaturemaps {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Fading-memory and memory-capacity probe for each configured mode.
    DiagnoseMemory { config: PathBuf },
}

#[derive(Clone, Debug)]
struct SeedRange(Vec<u64>);

fn parse_seed_range(s: &str) -> Result<SeedRange, String> {
    let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty seed range {s}"));
            }
            Ok(SeedRange((a..=b).collect()))
        }
        None => Ok(SeedRange(vec![parse(s)?])),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    experiment::parse_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seeds,
            mode,
            out,
            emit_plots,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = seeds {
                cfg.run.seeds = s.0;
            }
            if let Some(m) = mode {
                cfg.reservoir.modes = vec![m];
            }
            if let Some(o) = out {
                cfg.run.output_dir = o;
            }
            run(&cfg, emit_plots)
        }
        Command::DemoFeaturemaps { points } => {
            if points == 0 {
                eprintln!("error: --points must be >= 1");
                return ExitCode::from(2);
            }
            print!("{}", experiment::feature_map_curves(points));
            Ok(ExitCode::SUCCESS)
        }
        Command::DiagnoseMemory { config } => match load(&config) {
            Ok(cfg) => experiment::diagnose_memory(&cfg, &ProbeOptions::default())
                .map(|rows| {
                    print!("{}", experiment::memory_csv(&rows));
                    ExitCode::SUCCESS
                })
                .context("memory probe failed"),
            Err(code) => return code,
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.downcast_ref::<Error>().is_some_and(|e| matches!(e, Error::Config(_)));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}

fn run(cfg: &ExperimentConfig, emit_plots: bool) -> anyhow::Result<ExitCode> {
    let outcome = experiment::run_experiment(cfg)?;
    for f in &outcome.failures {
        let mode = f.mode.map(|m| m.name()).unwrap_or("all");
        eprintln!("seed {} ({mode}) failed: {}", f.seed, f.message);
    }
    print!(
        "{}",
        experiment::summary_csv(&cfg.reservoir.modes, &outcome.records, &outcome.failures)
    );
    if outcome.records.is_empty() {
        bail!("every seed failed");
    }
    if emit_plots {
        for path in hqcrc::plot::emit_plots(&outcome.output_dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    eprintln!("results in {}", outcome.output_dir.display());
    Ok(ExitCode::from(outcome.exit_code() as u8))
}
