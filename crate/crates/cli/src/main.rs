//! `smale` — config-driven experiments on the n-player iterated prisoner's
//! dilemma under time-average strategies.
//!
//! Exit codes: 0 all checks passed; 1 a check (or sweep row, or suite item)
//! failed; 2 invalid input (config syntax, game axioms, plan shape,
//! infeasible checks); 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use smale_cli::config::{ConfigError, ExperimentConfig};
use smale_cli::report::{plan_label, render_report, write_atomic};
use smale_cli::sweep::{all_rows_passed, render_sweep_csv, run_sweep, SweepAxis};
use smale_cli::{run_experiment, run_suite};

#[derive(Parser)]
#[command(
    name = "smale",
    version,
    about = "Exact-arithmetic experiments on time-average strategies in the iterated prisoner's dilemma"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a config; nothing runs and nothing is written.
    Validate { config: PathBuf },
    /// Run one experiment and write trajectory.csv, report.txt, summary.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's out_dir and SMALE_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a base config over a grid of values on one axis.
    Sweep {
        config: PathBuf,
        /// Which parameter the grid varies.
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated grid values, e.g. "1,9/10,5/6,4/5".
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification suite (one line per item).
    PaperSuite {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

/// `Ok(true)` maps to exit 0, `Ok(false)` to exit 1, errors to 2 or 3.
fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let exp = cfg.resolve()?;
            println!("{}: valid", config.display());
            println!("  players: {}", exp.game.players());
            println!("  horizon: {}", exp.horizon);
            for (j, plan) in exp.plans.iter().enumerate() {
                println!("  plan {}: {}", j + 1, plan_label(plan));
            }
            let checks: Vec<&str> = exp.checks.iter().map(|c| c.token()).collect();
            println!(
                "  checks: {}",
                if checks.is_empty() {
                    "none".to_string()
                } else {
                    checks.join(", ")
                }
            );
            Ok(true)
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let exp = cfg.resolve()?;
            let out_dir = resolve_out_dir(out, cfg.out_dir.clone());
            let (output, artifacts) = run_experiment(&exp, &out_dir)?;
            print!(
                "{}",
                render_report(
                    &exp.game,
                    &exp.plans,
                    exp.horizon,
                    exp.seed,
                    &output.trajectory,
                    &output.outcomes
                )
            );
            println!("wrote {}", artifacts.trajectory_csv.display());
            println!("wrote {}", artifacts.report_txt.display());
            println!("wrote {}", artifacts.summary_json.display());
            Ok(output.passed())
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out_dir = resolve_out_dir(out, cfg.out_dir.clone());
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            let (rows, artifacts) = run_sweep(&cfg, axis, &values, &out_dir)?;
            print!("{}", render_sweep_csv(&rows));
            println!("wrote {}", artifacts.csv.display());
            println!("wrote {}", artifacts.json.display());
            Ok(all_rows_passed(&rows))
        }
        Command::PaperSuite { out } => {
            let items = run_suite();
            for item in &items {
                let status = if item.passed { "PASS" } else { "FAIL" };
                println!("[{status}] item {}: {} — {}", item.id, item.title, item.detail);
            }
            let out_dir = resolve_out_dir(out, None);
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating output directory {out_dir:?}"))?;
            let path = out_dir.join("suite.json");
            let mut text =
                serde_json::to_string_pretty(&items).context("serializing suite results")?;
            text.push('\n');
            write_atomic(&path, text.as_bytes())
                .with_context(|| format!("writing {path:?}"))?;
            println!("wrote {}", path.display());
            Ok(items.iter().all(|i| i.passed))
        }
    }
}

/// Output directory precedence: `--out`, then the config's `out_dir`, then
/// `SMALE_OUT_DIR`, then the current directory.
fn resolve_out_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os("SMALE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
