use clap::{Parser, Subcommand};
use std::path::PathBuf;
use thermotop_cli::commands::{self, CliError};
use thermotop_cli::config::MethodArg;

/// Simulation front-end for thermodynamic rigid-body systems: implicit
/// structure-preserving stepping, explicit Runge-Kutta baselines, CSV and
/// SVG emission, invariant checks, convergence studies.
#[derive(Parser)]
#[command(name = "thermotop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the trajectory CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; falls back to output.csv from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the method from the config.
        #[arg(long, value_enum)]
        method: Option<MethodArgCli>,
    },
    /// Run the implicit scheme and the explicit baseline side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Directory for both CSVs, the summary, and the overlay plots.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the invariant suites; nonzero exit on any failure.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Write the machine-readable report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure the convergence order against a fine reference solution.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step sizes, largest first (default 0.02,0.01,0.005).
        #[arg(long)]
        h_list: Option<String>,
    },
    /// Render selected CSV columns as an SVG line plot.
    Plot {
        /// Input CSV file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated column names to draw.
        #[arg(long)]
        fields: String,
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArgCli {
    Vi,
    Rk2,
    Rk4,
}

impl From<MethodArgCli> for MethodArg {
    fn from(m: MethodArgCli) -> Self {
        match m {
            MethodArgCli::Vi => MethodArg::Vi,
            MethodArgCli::Rk2 => MethodArg::Rk2,
            MethodArgCli::Rk4 => MethodArg::Rk4,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            method,
        } => commands::simulate(&config, out.as_deref(), method.map(Into::into)),
        Command::Compare { config, out_dir } => commands::compare(&config, &out_dir),
        Command::Check { config, report } => commands::check(&config, report.as_deref()),
        Command::Convergence { config, h_list } => {
            commands::convergence(&config, h_list.as_deref())
        }
        Command::Plot { input, fields, out } => commands::plot(&input, &fields, &out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
