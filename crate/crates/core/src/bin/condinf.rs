use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use condinf::io::{self, OutputFormat, SimMode, SweepArgs, SEED_ENV};

/// Corrected inference for estimates reported after a data-dependent
/// deviation from a pre-analysis plan.
#[derive(Parser)]
#[command(name = "condinf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Coverage,
    Pivot,
    Median,
    Meta,
    Asymptotics,
}

#[derive(Subcommand)]
enum Command {
    /// Corrected interval and median-unbiased point for a problem document.
    Correct {
        /// TOML problem document.
        problem: PathBuf,
        /// Overrides `alpha` in the document.
        #[arg(long)]
        alpha: Option<f64>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Corrected intervals over a grid of cutoffs, as CSV.
    Sweep {
        problem: PathBuf,
        /// `kind:selector`, e.g. `economic_above:pre`.
        #[arg(long)]
        family: Option<String>,
        /// Reported cutoff.
        #[arg(long)]
        kappa: Option<f64>,
        /// Half-width of the grid around the reported cutoff.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Number of grid points.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo checks of the procedure.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Defaults to `[simulation].seed`, then a fixed seed.
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Parse and validate a problem document.
    Validate { problem: PathBuf },
}

fn format(f: Format) -> OutputFormat {
    match f {
        Format::Table => OutputFormat::Table,
        Format::Csv => OutputFormat::Csv,
        Format::Machine => OutputFormat::Machine,
    }
}

fn emit(text: &str, out: Option<&Path>) -> condinf::error::Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> condinf::error::Result<()> {
    match cli.command {
        Command::Correct {
            problem,
            alpha,
            out,
            format: f,
        } => {
            let r = io::cmd_correct(&problem, alpha, format(f))?;
            emit(&r.rendered, out.as_deref())
        }
        Command::Sweep {
            problem,
            family,
            kappa,
            epsilon,
            grid,
            out,
        } => {
            let args = SweepArgs {
                family,
                kappa,
                epsilon,
                grid,
            };
            emit(&io::cmd_sweep(&problem, &args)?.csv, out.as_deref())
        }
        Command::Simulate {
            config,
            mode,
            seed,
            out,
            format: f,
        } => {
            let mode = match mode {
                Mode::Coverage => SimMode::Coverage,
                Mode::Pivot => SimMode::Pivot,
                Mode::Median => SimMode::Median,
                Mode::Meta => SimMode::Meta,
                Mode::Asymptotics => SimMode::Asymptotics,
            };
            let r = io::cmd_simulate(&config, mode, seed, format(f))?;
            emit(&r.rendered, out.as_deref())
        }
        Command::Validate { problem } => emit(&io::cmd_validate(&problem)?, None),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
