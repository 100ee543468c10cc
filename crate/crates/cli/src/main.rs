use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pks_experiment::{cmd_check, cmd_psfit, cmd_run, cmd_sweep, load_config, CliError, EXIT_ERROR, EXIT_OK};

#[derive(Parser)]
#[command(name = "pks", version, about = "Shear-flow Keller-Segel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run; exits 2 on blow-up.
    Run { config: PathBuf },
    /// One run per A; A = 0 means no flow. Exits 2 if any run blows up.
    Sweep {
        config: PathBuf,
        #[arg(long = "A", value_delimiter = ',', required = true)]
        a: Vec<f64>,
    },
    /// Passive-scalar decay rates and the fitted exponent alpha.
    Psfit {
        config: PathBuf,
        #[arg(long = "A", value_delimiter = ',', required = true)]
        a: Vec<f64>,
    },
    /// Identity and heat-bound verification report.
    Check {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config } => {
            let report = cmd_run(&load_config(&config)?)?;
            println!("{}", report.outcome_line());
            Ok(report.exit_code())
        }
        Command::Sweep { config, a } => {
            let report = cmd_sweep(&load_config(&config)?, &a)?;
            for r in &report.runs {
                println!("{}", r.outcome_line());
            }
            println!("summary: {}", report.summary_path.display());
            Ok(report.exit_code())
        }
        Command::Psfit { config, a } => {
            let report = cmd_psfit(&load_config(&config)?, &a)?;
            for r in &report.rows {
                println!("A={} rate={:e} r_squared={:.6}", r.a, r.rate, r.r_squared);
            }
            match report.fit {
                Some(f) => println!("alpha={:.4} r_squared={:.6}", f.alpha, f.r_squared),
                None => println!("alpha=unavailable"),
            }
            Ok(EXIT_OK)
        }
        Command::Check { report } => {
            let r = cmd_check(report.as_deref())?;
            for row in &r.rows {
                println!(
                    "{} {} lhs={:e} rhs={:e}",
                    if row.pass { "PASS" } else { "FAIL" },
                    row.name,
                    row.lhs,
                    row.rhs
                );
            }
            Ok(if r.all_pass() { EXIT_OK } else { EXIT_ERROR })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
