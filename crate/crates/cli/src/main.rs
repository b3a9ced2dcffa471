//! `bms`: build behavior graphs, train and evaluate the detection,
//! prediction and generation pipelines, and write run manifests.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use bms_core::Error;
use commands::Outcome;

/// Exit codes.
const USAGE: u8 = 1;
const DATA: u8 = 2;
const NUMERIC: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_numeric() => NUMERIC,
        Error::InvalidArgument(_) | Error::InvalidK(_) | Error::InfeasibleConfig(_) => USAGE,
        _ => DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BMS_LOG", "warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        log::warn!("thread pool already initialized: {e}");
    }
    let start = Instant::now();
    match run(&cli, &argv, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli, argv: &[String], start: Instant) -> bms_core::Result<()> {
    let outcome: Outcome = commands::dispatch(cli)?;
    let name = subcommand_name(&cli.command);
    commands::write_manifest(&outcome, name, argv, start)?;
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    } else {
        println!("{}", outcome.message);
    }
    Ok(())
}

fn subcommand_name(c: &Command) -> &'static str {
    use args::{DetectCmd, ExpressCmd, GenerateCmd, MetricsCmd, PredictCmd};
    match c {
        Command::Synth(_) => "synth",
        Command::Ingest(_) => "ingest",
        Command::BuildGraph(_) => "build-graph",
        Command::ExportDot(_) => "export-dot",
        Command::DetectTrain(_) | Command::Detect(DetectCmd::Train(_)) => "detect-train",
        Command::DetectEval(_) | Command::Detect(DetectCmd::Eval(_)) => "detect-eval",
        Command::PredictEval(_) | Command::Predict(PredictCmd::Eval(_)) => "predict-eval",
        Command::Entropy(_) => "entropy",
        Command::GenerateTrain(_) | Command::Generate(GenerateCmd::Train(_)) => "generate-train",
        Command::GenerateSample(_) | Command::Generate(GenerateCmd::Sample(_)) => "generate-sample",
        Command::GenerateHarness(_) | Command::Generate(GenerateCmd::Harness(_)) => "generate-harness",
        Command::MetricsCompare(_) | Command::Metrics(MetricsCmd::Compare(_)) => "metrics-compare",
        Command::ExpressCurve(_) | Command::Express(ExpressCmd::Curve(_)) => "express-curve",
    }
}
