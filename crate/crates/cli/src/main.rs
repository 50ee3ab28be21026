use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use certkit::commands::{self, error_code, Outcome, Status};
use certkit::config::Loaded;

#[derive(Parser)]
#[command(name = "certkit", version, about = "ISS certificates for ODE-heat cascades with boundary disturbances")]
struct Cli {
    /// Configuration file (TOML). Defaults to the bundled worked example.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for P12 and evaluate the certificate conditions.
    Certify,
    /// Run the Galerkin simulation and compare against the ISS bounds.
    Simulate,
    /// Certify over a grid of one parameter.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Sample the nonlinearity hypotheses.
    Audit {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the worked example and compare with its printed values.
    ReproduceExample,
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let grid = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("grid value `{s}` is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        bail!("--grid is empty");
    }
    Ok(grid)
}

fn load(path: &Option<PathBuf>) -> Result<Loaded> {
    match path {
        Some(p) => Loaded::from_path(p),
        None => Ok(Loaded::example()),
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Certify => commands::certify(&load(&cli.config)?, out),
        Command::Simulate => commands::simulate(&load(&cli.config)?, out),
        Command::Sweep { param, grid } => {
            let grid = parse_grid(&grid)?;
            commands::sweep(&load(&cli.config)?, out, &param, &grid)
        }
        Command::Audit { seed } => commands::audit(&load(&cli.config)?, out, seed),
        Command::ReproduceExample => {
            if cli.config.is_some() {
                bail!("reproduce-example always uses the bundled configuration; drop --config");
            }
            commands::reproduce_example(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_text());
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            match &outcome.status {
                Status::Success => {}
                Status::Infeasible(msg) | Status::Violation(msg) => eprintln!("certkit: {msg}"),
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("certkit: error: {e:#}");
            ExitCode::from(error_code(&e) as u8)
        }
    }
}
