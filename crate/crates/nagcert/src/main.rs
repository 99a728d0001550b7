//! Command-line front end.
//!
//! Exit codes: 0 when every asserted check passed, 1 when a check failed,
//! 2 on configuration or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nagcert::harness::{self, config, verify, EmitOptions, HarnessError};

#[derive(Parser)]
#[command(
    name = "nagcert",
    version,
    about = "Accelerated gradient runs with machine-checked convergence certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme sections of a config file and check the certificates.
    Run {
        /// TOML experiment description.
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the built-in verification matrix over the preset objectives.
    VerifyAll {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run all scheme sections on the same problem and measure their drift.
    Compare {
        /// TOML experiment description with two or more aligned sections.
        config: PathBuf,
        /// Print the deviation at every iteration, not just the worst.
        #[arg(long)]
        per_k: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Integrate the continuous-time system and certify its rate.
    Ode {
        /// TOML experiment description with an [ode] section.
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Args)]
struct CommonOpts {
    /// Seed for synthetic objectives (overrides the config).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Write CSV tables (overrides the config).
    #[arg(long, overrides_with = "no_csv")]
    csv: bool,
    /// Suppress CSV tables.
    #[arg(long)]
    no_csv: bool,
    /// Write SVG plots (overrides the config).
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    /// Suppress SVG plots.
    #[arg(long)]
    no_svg: bool,
    /// Print only the verdict.
    #[arg(long)]
    quiet: bool,
    /// Output directory (overrides the config and NAGCERT_OUT).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonOpts {
    fn tri(yes: bool, no: bool) -> Option<bool> {
        match (yes, no) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }

    fn emit(&self) -> EmitOptions {
        EmitOptions {
            out_dir: self.out.clone(),
            csv: Self::tri(self.csv, self.no_csv),
            svg: Self::tri(self.svg, self.no_svg),
            seed: self.seed,
        }
    }

    fn print_summary(&self, text: &str) {
        if self.quiet {
            if let Some(verdict) = text.lines().last() {
                println!("{verdict}");
            }
        } else {
            print!("{text}");
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run { config, common } => {
            let cfg = config::load_config(&config)?;
            let outcome = harness::run_experiment(&cfg, &common.emit())?;
            common.print_summary(&outcome.summary_text());
            Ok(outcome.all_passed())
        }
        Command::VerifyAll { common } => {
            let report = verify::run_default_matrix(&verify::VerifyOptions::default())?;
            let text = report.summary_text();
            let out_dir = harness::resolve_output_dir(common.out.as_deref(), None);
            let path = harness::write_summary(&out_dir, &text)?;
            common.print_summary(&text);
            if !common.quiet {
                println!("summary written to {}", path.display());
            }
            Ok(report.all_passed())
        }
        Command::Compare {
            config,
            per_k,
            common,
        } => {
            let cfg = config::load_config(&config)?;
            let outcome = harness::compare_schemes(&cfg, &common.emit())?;
            if per_k && !common.quiet {
                println!("k,deviation");
                for (k, d) in outcome.per_k.iter().enumerate() {
                    println!("{k},{d:.16e}");
                }
            }
            let passed = outcome.deviation <= 1e-9;
            if !common.quiet {
                println!(
                    "compared {} over {} iterations",
                    outcome.labels.join(", "),
                    outcome.per_k.len().saturating_sub(1)
                );
            }
            println!(
                "{} max deviation {:.3e} at k={} (tolerance 1e-9)",
                if passed { "PASS" } else { "FAIL" },
                outcome.deviation,
                outcome.at
            );
            Ok(passed)
        }
        Command::Ode { config, common } => {
            let cfg = config::load_config(&config)?;
            let outcome = harness::run_ode_experiment(&cfg, &common.emit())?;
            common.print_summary(&outcome.summary_text());
            Ok(outcome.all_passed())
        }
    }
}
