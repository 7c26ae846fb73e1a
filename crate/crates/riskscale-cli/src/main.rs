use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use riskscale_cli::commands::{self, DiagnosticsFlags, SimulateFlags};

/// Credibility premiums, tariff-scale diagnostics, and redistribution
/// simulations driven by scenario files.
#[derive(Parser)]
#[command(name = "riskscale", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether premiums depend on the criteria only through the scale.
    ///
    /// Exit code 0 when every sampled level-set comparison agrees, 2 when a
    /// premium discrepancy witness is found.
    Check {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Directory for check_report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seed for subset and level-set sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Premium discrepancy tolerance (default 1e-6).
        #[arg(long)]
        tol: Option<f64>,
        /// Grid resolution per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Number of parameter subsets to sample.
        #[arg(long)]
        subsets: Option<usize>,
        /// Level-set pairs per subset.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Score the structural sufficiency conditions of a scenario.
    ///
    /// Exit code 0 when all residuals pass, 2 otherwise.
    Verify {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Directory for verify_report.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seed for subset sampling inside the scorecard.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Residual tolerance (default 1e-5).
        #[arg(long)]
        tol: Option<f64>,
        /// Grid resolution per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Simulate premium redistribution across organisms.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Population size.
        #[arg(long)]
        n: usize,
        /// Number of organisms.
        #[arg(long)]
        k: usize,
        /// Assignment rule: random | theta_stratified | x_stratified.
        #[arg(long, default_value = "random")]
        assignment: String,
        /// Premium rule: global_bayes | scale_table | flat.
        #[arg(long, default_value = "global_bayes")]
        premium: String,
        /// Tariff bins (scale_table only).
        #[arg(long)]
        bins: Option<usize>,
        /// Population seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Claim model: deterministic | gamma.
        #[arg(long, default_value = "deterministic")]
        claims: String,
        /// Claim coefficient of variation (gamma only).
        #[arg(long)]
        cv: Option<f64>,
        /// Directory for simulation.json and organisms.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the restricted Bayes premium at a criteria point.
    Premium {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// First criterion value.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Second criterion value.
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Parameter restriction "lo:hi[,lo:hi...]"; defaults to the full
        /// support.
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<String>,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Check {
            scenario,
            out,
            seed,
            tol,
            grid,
            subsets,
            pairs,
        } => commands::cmd_check(
            &scenario,
            &out,
            &DiagnosticsFlags {
                seed,
                tol,
                grid,
                subsets,
                pairs,
            },
        ),
        Command::Verify {
            scenario,
            out,
            seed,
            tol,
            grid,
        } => commands::cmd_verify(
            &scenario,
            &out,
            &DiagnosticsFlags {
                seed,
                tol,
                grid,
                subsets: None,
                pairs: None,
            },
        ),
        Command::Simulate {
            scenario,
            n,
            k,
            assignment,
            premium,
            bins,
            seed,
            claims,
            cv,
            out,
        } => commands::cmd_simulate(
            &scenario,
            &out,
            &SimulateFlags {
                n,
                k,
                assignment,
                premium,
                bins,
                seed,
                claims,
                cv,
            },
        ),
        Command::Premium { scenario, x, y, omega } => {
            commands::cmd_premium(&scenario, x, y, omega.as_deref())
        }
    }
}

fn main() -> ExitCode {
    // A malformed command line is an error (exit 1), never a verdict; help
    // and version requests stay successful.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
