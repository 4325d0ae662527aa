// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bqctl_cli::{run_pipeline, run_stage, verify, CliError, RunConfig, RunOptions, Stage, Suite};

#[derive(Parser)]
#[command(name = "bqctl", version, about = "Binary quantum control pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the continuous relaxation.
    Relax(StageArgs),
    /// Round relaxed controls to binary controls.
    Round(StageArgs),
    /// Improve binary controls by trust-region local search.
    Improve(StageArgs),
    /// Run relax, round and improve in order.
    Run(CommonArgs),
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value = "verify_out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Wall-clock limit per stage, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input controls CSV; defaults to the previous stage's output in --out.
    #[arg(long)]
    controls: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<(RunConfig, RunOptions), CliError> {
        let cfg = RunConfig::load(&self.config)?;
        let time_limit = match self.time_limit {
            Some(s) if !(s > 0.0) || !s.is_finite() => {
                return Err(CliError::Config(format!(
                    "--time-limit must be positive, got {s}"
                )))
            }
            s => s.map(Duration::from_secs_f64),
        };
        let opts = RunOptions {
            out: self.out.clone(),
            force: self.force,
            seed: self.seed,
            time_limit,
        };
        Ok((cfg, opts))
    }
}

fn stage(args: &StageArgs, stage: Stage) -> Result<serde_json::Value, CliError> {
    let (cfg, opts) = args.common.load()?;
    let (_, report) = run_stage(&cfg, &opts, stage, args.controls.as_deref())?;
    Ok(serde_json::to_value(report)?)
}

fn dispatch(cli: Cli) -> Result<(serde_json::Value, bool), CliError> {
    match cli.command {
        Command::Relax(a) => Ok((stage(&a, Stage::Relax)?, true)),
        Command::Round(a) => Ok((stage(&a, Stage::Round)?, true)),
        Command::Improve(a) => Ok((stage(&a, Stage::Improve)?, true)),
        Command::Run(a) => {
            let (cfg, opts) = a.load()?;
            let outcome = run_pipeline(&cfg, &opts)?;
            let value = json!({
                "status": "ok",
                "summary": outcome.summary_path,
                "objectives": outcome.reports.iter().map(|r| (r.stage.clone(), r.objective)).collect::<Vec<_>>(),
            });
            Ok((value, true))
        }
        Command::Verify { suite, out, seed } => {
            let report = verify(suite, seed, &out)?;
            std::fs::create_dir_all(&out)?;
            let name = serde_json::to_value(suite)?
                .as_str()
                .unwrap_or("suite")
                .to_string();
            let text = serde_json::to_string_pretty(&report)? + "\n";
            std::fs::write(out.join(format!("verify_{name}.json")), &text)?;
            Ok((serde_json::to_value(&report)?, report.passed))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok((value, passed)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&value).unwrap_or_default()
            );
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let value = json!({"status": "error", "kind": e.kind(), "message": e.to_string()});
            eprintln!("{value}");
            ExitCode::from(2)
        }
    }
}
