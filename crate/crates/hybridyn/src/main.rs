//! Command line front end. Exit codes: 0 success, 1 configuration problems,
//! 2 numerical or I/O failure while running, 3 completed run with failed
//! checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridyn::config::{ExperimentConfig, ValidationReport, EXPERIMENT_NAMES};
use hybridyn::experiments::run_experiment;
use hybridyn::report::{sha256_hex, write_snapshot, Summary};

#[derive(Parser)]
#[command(name = "hybridyn", version, about = "Linear hybrid dynamics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration file.
    Run { config: PathBuf },
    /// Check a configuration file and report findings without running.
    Validate { config: PathBuf },
    /// Print the package version.
    Version,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECKS: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => run(&config),
        Command::Validate { config } => validate(&config),
        Command::Version => {
            println!("{}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, String, ValidationReport), String> {
    let bytes = std::fs::read(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| format!("{} is not valid UTF-8", path.display()))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let report = cfg.validate();
    Ok((cfg, sha256_hex(&bytes), report))
}

fn run(path: &Path) -> ExitCode {
    let (cfg, digest, report) = match load(path) {
        Ok(parts) => parts,
        Err(message) => {
            eprintln!("configuration error: {message}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if !report.errors.is_empty() {
        for finding in &report.errors {
            eprintln!("configuration error: {finding}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }

    let outcome = match run_experiment(&cfg, &digest) {
        Ok(outcome) => outcome,
        Err(error) => {
            eprintln!("numerical failure: {error}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };

    let mut warnings = report.warnings.clone();
    warnings.extend(outcome.warnings.iter().cloned());
    let summary = Summary {
        experiment: cfg.name().to_string(),
        seed: cfg.seed(),
        params_digest: digest,
        warnings,
        checks: outcome.checks,
    };

    let output = cfg.output();
    if let Some(csv_path) = &output.csv {
        if let Err(error) = outcome.table.write(csv_path) {
            eprintln!("cannot write {}: {error}", csv_path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    if let Some(summary_path) = &output.summary {
        if let Err(error) = summary.write(summary_path) {
            eprintln!("cannot write {}: {error}", summary_path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    if let Some(snapshot_path) = &output.snapshot {
        match &outcome.snapshot {
            Some(ensemble) => {
                if let Err(error) = write_snapshot(snapshot_path, ensemble) {
                    eprintln!("cannot write {}: {error}", snapshot_path.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            None => eprintln!(
                "note: {} produces no snapshot; {} not written",
                summary.experiment,
                snapshot_path.display()
            ),
        }
    }

    print!("{}", summary.render());
    if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS)
    }
}

fn validate(path: &Path) -> ExitCode {
    let report = match load(path) {
        Ok((_, _, report)) => report,
        Err(message) => ValidationReport {
            errors: vec![message],
            warnings: vec![format!(
                "expected a JSON object with an \"experiment\" tag, one of: {}",
                EXPERIMENT_NAMES.join(", ")
            )],
        },
    };
    let body = serde_json::json!({
        "valid": report.errors.is_empty(),
        "findings": report.errors,
        "warnings": report.warnings,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&body).expect("report serializes")
    );
    ExitCode::SUCCESS
}
