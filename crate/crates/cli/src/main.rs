//! `halfline`: evaluate, simulate and verify the half-line Green's function.
//!
//! Exit codes: 0 pass, 1 verification failed, 2 configuration, 3 accuracy,
//! 4 inconclusive, 5 divergence.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use halfline::Dynamics;

use commands::Which;
use config::{Evaluator, RunConfig};
use error::{exit, CliError, Result};
use output::{Manifest, Output};

#[derive(Parser, Debug)]
#[command(name = "halfline", version, about)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parameter and grid sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Double every sampling grid and mesh this many times.
    #[arg(long, global = true, default_value_t = 0)]
    refine: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate Green's function entries from each evaluator.
    GreenEval {
        /// Evaluation point `x,y,t`; repeatable.
        #[arg(long = "point", value_parser = parse_point)]
        points: Vec<[f64; 3]>,
        /// Comma-separated subset of evaluators.
        #[arg(long, value_delimiter = ',')]
        evaluators: Vec<Evaluator>,
    },
    /// Run the solver and write snapshots.
    Solve {
        #[arg(value_enum)]
        system: System,
        /// Also write two-column `x value` files per snapshot.
        #[arg(long)]
        plot_data: bool,
    },
    /// Run verification harnesses and write JSON reports.
    Verify {
        #[arg(value_enum)]
        which: Which,
        /// Output directory of an earlier `solve nonlinear` run to analyse
        /// instead of solving afresh (decay and ansatz).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Classify a grid of boundary coefficients and locate growing modes.
    StabilityMap,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum System {
    Linear,
    Nonlinear,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected x,y,t (got {} numbers)", v.len()))
}

fn command_name(c: &Command) -> String {
    match c {
        Command::GreenEval { .. } => "green-eval".into(),
        Command::Solve { system, .. } => {
            format!("solve {}", system.to_possible_value().unwrap().get_name())
        }
        Command::Verify { which, .. } => {
            format!("verify {}", which.to_possible_value().unwrap().get_name())
        }
        Command::StabilityMap => "stability-map".into(),
    }
}

fn run(cli: &Cli, cfg: &RunConfig, out: &mut Output, manifest: &mut Manifest) -> Result<i32> {
    match &cli.command {
        Command::GreenEval { points, evaluators } => {
            commands::green_eval(cfg, points, evaluators, out)
        }
        Command::Solve { system, plot_data } => {
            let kind = match system {
                System::Linear => Dynamics::Linear,
                System::Nonlinear => Dynamics::Nonlinear,
            };
            commands::solve(cfg, kind, *plot_data, out, manifest)
        }
        Command::Verify { which, trajectory } => {
            commands::verify(cfg, *which, trajectory.as_deref(), out, manifest)
        }
        Command::StabilityMap => commands::stability_map(cfg, out),
    }
}

fn setup(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    cfg.refine(cli.refine);
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match setup(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = Output::create(&cfg.output_dir)
        .and_then(|out| Ok((out, Manifest::new(&command_name(&cli.command), &cfg)?)));
    let (mut out, mut manifest) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let code = match run(&cli, &cfg, &mut out, &mut manifest) {
        Ok(code) => {
            manifest.status = match code {
                exit::PASS => "pass",
                exit::INCONCLUSIVE => "inconclusive",
                _ => "fail",
            }
            .into();
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            manifest.status = "error".into();
            manifest.message = Some(e.to_string());
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    if let Err(e) = manifest.write(&mut out, &cfg) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(exit::FAIL as u8);
    }
    ExitCode::from(code as u8)
}
