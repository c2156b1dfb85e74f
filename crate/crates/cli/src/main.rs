//! `fracpoisson`: plot-ready data for the fractional Poisson process.
//!
//! Exit status: 0 on success, 1 when `validate` finds a failing criterion or
//! the output cannot be written, 2 for invalid arguments, 3 for numerical
//! failures and 4 when too few simulated paths meet a condition.

mod commands;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::{Failure, FidiRequest, PmfRequest, ResidualRequest, ValidateRequest};
use table::{Format, Table};

#[derive(Parser)]
#[command(name = "fracpoisson", version, about = "Fractional Poisson process: analytic laws next to simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// P(N(t) = n) for n = 0..n_max, with a simulated estimate.
    Pmf(PmfArgs),
    /// Densities of the last epoch before t1 and of the residual life, given N(t1) = n1.
    Residual(ResidualArgs),
    /// Joint probability P(N(t_1) = n_1, ..., N(t_k) = n_k) for each prefix of the schedule.
    Fidi(FidiArgs),
    /// Run the acceptance criteria and write a pass/fail report.
    Validate(ValidateArgs),
    /// Mittag-Leffler functions at one point.
    #[command(hide = true)]
    MlEval(MlEvalArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long = "t")]
    t: f64,
    /// Last n tabulated; by default enough rows to leave less than --tol in the tail.
    #[arg(long)]
    n_max: Option<usize>,
    /// Simulated paths; 0 skips the simulation.
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ResidualArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    t1: f64,
    #[arg(long)]
    n1: usize,
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Residual-life tail mass allowed beyond the kernel grid.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FidiArgs {
    #[arg(long)]
    beta: f64,
    /// Observation times, e.g. 1,2.
    #[arg(long, value_delimiter = ',', required = true)]
    times: Vec<f64>,
    /// Counts at those times, e.g. 0,1.
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Reduced ensembles, under a minute.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 20_240_611)]
    seed: u64,
    /// Factor applied to every acceptance threshold.
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    /// Run only these criteria, e.g. 1,8.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MlEvalArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn emit(table: &Table, out: &OutputArgs, command: &str, config: Value, seed: Option<u64>) -> Result<(), Failure> {
    match &out.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, out.format, command, &config, seed)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w, out.format, command, &config, seed)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Pmf(a) => {
            let t = commands::pmf(&PmfRequest {
                beta: a.beta,
                t: a.t,
                n_max: a.n_max,
                paths: a.paths,
                seed: a.seed,
                tol: a.tol,
            })?;
            let config = json!({
                "beta": a.beta, "t": a.t, "n_max": a.n_max, "paths": a.paths,
                "seed": a.seed, "tol": a.tol, "format": format!("{:?}", a.output.format).to_lowercase(),
            });
            emit(&t, &a.output, "pmf", config, Some(a.seed))
        }
        Command::Residual(a) => {
            let t = commands::residual(&ResidualRequest {
                beta: a.beta,
                t1: a.t1,
                n1: a.n1,
                paths: a.paths,
                seed: a.seed,
                tol: a.tol,
            })?;
            let config = json!({
                "beta": a.beta, "t1": a.t1, "n1": a.n1, "paths": a.paths,
                "seed": a.seed, "tol": a.tol, "format": format!("{:?}", a.output.format).to_lowercase(),
            });
            emit(&t, &a.output, "residual", config, Some(a.seed))
        }
        Command::Fidi(a) => {
            let t = commands::fidi(&FidiRequest {
                beta: a.beta,
                times: a.times.clone(),
                counts: a.counts.clone(),
                paths: a.paths,
                seed: a.seed,
            })?;
            let config = json!({
                "beta": a.beta, "times": a.times, "counts": a.counts, "paths": a.paths,
                "seed": a.seed, "format": format!("{:?}", a.output.format).to_lowercase(),
            });
            emit(&t, &a.output, "fidi", config, Some(a.seed))
        }
        Command::Validate(a) => {
            let (t, failed) = commands::validate(&ValidateRequest {
                quick: a.quick,
                seed: a.seed,
                tol: a.tol,
                only: a.only.clone(),
            })?;
            let config = json!({
                "quick": a.quick, "seed": a.seed, "tol": a.tol, "only": a.only,
                "format": format!("{:?}", a.output.format).to_lowercase(),
            });
            emit(&t, &a.output, "validate", config, Some(a.seed))?;
            if failed > 0 {
                return Err(Failure::Rejected(failed));
            }
            Ok(())
        }
        Command::MlEval(a) => {
            let t = commands::ml_eval(a.beta, a.x)?;
            let config = json!({ "beta": a.beta, "x": a.x });
            emit(&t, &a.output, "ml-eval", config, None)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracpoisson: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
