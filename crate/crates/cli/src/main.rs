//! `symlab run <config> [--out <dir>]` and `symlab validate <config>`.
//!
//! On failure the last line of standard error is a single `key=value` record.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symlab::error::EllipticityViolation;
use symlab::experiment::{self, Diagnostic};
use symlab::Error;

#[derive(Parser)]
#[command(name = "symlab", version, about = "Run operator-multiplier experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment and write its reports.
    Run {
        config: PathBuf,
        /// Output directory (default: the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report every violated precondition with its field path.
    Validate { config: PathBuf },
}

fn quote(s: &str) -> String {
    let clean: String = s.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    format!("\"{}\"", clean.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Condition-specific fields of the error record.
fn error_fields(e: &Error) -> Vec<(&'static str, String)> {
    match e {
        Error::ApViolation { constant, bound } => vec![("constant", constant.to_string()), ("bound", bound.to_string())],
        Error::Ellipticity(EllipticityViolation::LowerBound { m0 }) => {
            vec![("condition", "m0".into()), ("m0", m0.to_string())]
        }
        Error::Ellipticity(EllipticityViolation::Sector { phi1 }) => {
            vec![("condition", "sector".into()), ("phi1", phi1.to_string())]
        }
        Error::Ellipticity(EllipticityViolation::Degenerate) => vec![("condition", "degenerate".into())],
        Error::NotPositiveDefinite { min_eigenvalue } => vec![("min_eigenvalue", min_eigenvalue.to_string())],
        Error::OutsideSector { re, im, max_arg } => {
            vec![("lambda_re", re.to_string()), ("lambda_im", im.to_string()), ("max_arg", max_arg.to_string())]
        }
        Error::NonContraction { norms } => vec![("iterations", norms.len().to_string())],
        Error::NonIntegrable { axis, ratio } => vec![("axis", axis.to_string()), ("ratio", ratio.to_string())],
        _ => Vec::new(),
    }
}

fn fail(e: &Error) -> ExitCode {
    let mut line = format!("status=error kind={}", e.kind());
    for (k, v) in error_fields(e) {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push_str(&format!(" message={}", quote(&e.to_string())));
    eprintln!("{line}");
    ExitCode::from(1)
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("status=error kind=usage message={}", quote(e.kind().to_string().as_str()));
            return ExitCode::from(2);
        }
    };
    match cli.command {
        Command::Validate { config } => {
            let cfg = match experiment::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let diags = experiment::validate(&cfg);
            if diags.is_empty() {
                println!("status=ok diagnostics=0");
                ExitCode::SUCCESS
            } else {
                print_diagnostics(&diags);
                eprintln!("status=error kind=config diagnostics={}", diags.len());
                ExitCode::from(1)
            }
        }
        Command::Run { config, out } => {
            let cfg = match experiment::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let diags = experiment::validate(&cfg);
            if !diags.is_empty() {
                print_diagnostics(&diags);
                eprintln!("status=error kind=config diagnostics={}", diags.len());
                return ExitCode::from(1);
            }
            let out = out.unwrap_or_else(|| PathBuf::from("."));
            match experiment::run(&cfg, &out) {
                Ok(outcome) => {
                    for f in &outcome.files {
                        println!("wrote {}", f.display());
                    }
                    let mut line = String::from("status=ok");
                    for (k, v) in &outcome.summary {
                        line.push_str(&format!(" {k}={v}"));
                    }
                    println!("{line}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
