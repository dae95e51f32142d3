//! Command-line front end of the `blowup` binary.
//!
//! Every subcommand reads a JSON config (`--config`), accepts dotted
//! `--override key=value` pairs and writes its artifacts into the output
//! directory. Exit codes: 0 success, 1 diagnostics ran but the chain or the
//! certificate did not confirm, 2 config/parse/io errors, 3 numerical
//! errors, 4 grid or window too short.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use crate::Error;
use commands::CertificateOutcome;
use config::{GronwallConfig, MeanConfig, RunConfig, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Blow-up laboratory for u_tt - Δu = A|u|^p in R³")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Dotted override such as `grid.h=0.03125`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the radial problem and store the field.
    Solve(Common),
    /// Evaluate the lower-bound chain and the Gronwall certificate on a stored field.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Field CSV written by `solve`.
        #[arg(long)]
        field: PathBuf,
    },
    /// Solve a grid of exponents and amplitudes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; overrides `parallel_jobs`.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check the integral inequality on sampled data, or evaluate r*.
    Gronwall(Common),
    /// Spherical means of a built-in 3-D field.
    Mean(Common),
}

/// Exit code for an error that stopped a command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
        Error::GridTooShort(_) | Error::ExtendWindow { .. } => 4,
        _ => 3,
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("BLOWUP_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses the command line, runs the command and maps the outcome to an
/// exit code.
pub fn main_entry() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run_config(common: &Common) -> crate::Result<(RunConfig, serde_json::Value)> {
    let (mut cfg, doc): (RunConfig, _) = config::load(&common.config, &common.overrides)?;
    if let Some(out) = &common.output {
        cfg.output_dir = out.clone();
    }
    Ok((cfg, doc))
}

pub fn run(cli: Cli) -> crate::Result<u8> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, doc) = run_config(&common)?;
            let out = commands::run_solve(&cfg, doc, &cfg.output_dir)?;
            if let Some(t_b) = out.field.status.blowup_time() {
                println!("blow-up at t = {t_b}");
            } else {
                println!("status: {}", out.field.status.label());
            }
            Ok(if out.field.status.label() == "error" { 3 } else { 0 })
        }
        Command::Diagnose { common, field } => {
            let (cfg, doc) = run_config(&common)?;
            let out = commands::run_diagnose(&cfg, doc, &field, &cfg.output_dir)?;
            for t in &out.report.tables {
                println!("{:<20} {:?}", t.id, t.verdict);
            }
            let code = match &out.certificate {
                CertificateOutcome::Confirmed(c) => {
                    println!("certificate: confirmed (violation at r = {:?})", c.violation_found_at);
                    if out.report.all_hold {
                        0
                    } else {
                        1
                    }
                }
                CertificateOutcome::Skipped { reason } => {
                    println!("certificate: skipped ({reason})");
                    1
                }
                CertificateOutcome::Unconfirmed { reason, extend_window } => {
                    println!("certificate: unconfirmed ({reason})");
                    if *extend_window {
                        4
                    } else {
                        1
                    }
                }
            };
            Ok(code)
        }
        Command::Sweep { common, jobs } => {
            let (mut sweep, _): (SweepConfig, _) = config::load(&common.config, &common.overrides)?;
            if let Some(out) = &common.output {
                sweep.base.output_dir = out.clone();
            }
            let jobs = jobs.unwrap_or(sweep.parallel_jobs);
            let rows = commands::run_sweep(&sweep, jobs, &sweep.base.output_dir)?;
            let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
            println!(
                "{} rows written to {}",
                rows.len(),
                sweep.base.output_dir.join(commands::SWEEP_FILE).display()
            );
            if failed > 0 {
                println!("{failed} rows failed");
            }
            Ok(0)
        }
        Command::Gronwall(common) => {
            let (cfg, _): (GronwallConfig, _) = config::load(&common.config, &common.overrides)?;
            let out = commands::run_gronwall(&cfg)?;
            let json = serde_json::to_string_pretty(&out)?;
            if let Some(dir) = &common.output {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(commands::CERTIFICATE_FILE), &json)?;
            }
            println!("{json}");
            Ok(0)
        }
        Command::Mean(common) => {
            let (cfg, _): (MeanConfig, _) = config::load(&common.config, &common.overrides)?;
            let csv = commands::run_mean(&cfg)?;
            match &common.output {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("mean.csv"), &csv)?;
                }
                None => print!("{}", String::from_utf8_lossy(&csv)),
            }
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::GridTooShort("x".into())), 4);
        assert_eq!(exit_code(&Error::OutOfGrid("x".into())), 3);
    }
}
