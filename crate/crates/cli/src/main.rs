mod commands;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "subexp", version, about = "Tails and densities of exponential functionals of subordinators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// φ, φ′ and xφ′/φ.
    Phi {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_list)]
        t: Option<TList>,
    },
    /// ψ, ψ′, ψ″ and the exponent integral.
    Psi {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_list)]
        t: Option<TList>,
        /// Root tolerance for ψ.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Log-asymptotics of the tail and density, plus the closed form.
    Tail {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_list)]
        t: Option<TList>,
    },
    /// Fixed-point f′ and density k with the integral-equation residual.
    Density {
        #[command(flatten)]
        common: Common,
        /// Grid points.
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Fixed-point stopping tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        x_lo: Option<f64>,
        #[arg(long)]
        x_hi: Option<f64>,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Monte Carlo sample summary as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Small-jump cutoff for infinite measures.
        #[arg(long)]
        eps: Option<f64>,
        /// Use the exact sampler of an explicit special case.
        #[arg(long)]
        exact: bool,
        /// Tail points for P(I > t).
        #[arg(long, value_parser = parse_list)]
        t: Option<TList>,
        /// Also write the raw samples (binary).
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Moments, KS, slope and constant checks; exit 3 on any failed band.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        eps: Option<f64>,
        /// Fit window in t; chosen from the sample when absent.
        #[arg(long, value_parser = parse_list)]
        t: Option<TList>,
    },
    /// Exact moments E[Iⁿ] = n!/∏φ(i).
    Moments {
        #[command(flatten)]
        common: Common,
        /// Highest order.
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

/// Comma-separated numbers.
#[derive(Debug, Clone)]
pub struct TList(pub Vec<f64>);

fn parse_list(s: &str) -> Result<TList, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(TList(v)),
        _ => Err(format!("expected a comma-separated list of numbers, got '{s}'")),
    }
}

#[derive(Debug)]
pub enum CliError {
    Lib(subexp::Error),
    Validation(String),
}

impl From<subexp::Error> for CliError {
    fn from(e: subexp::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use subexp::Error::*;
        match self {
            CliError::Validation(_) => 3,
            CliError::Lib(NumericFailure { .. } | Singularity { .. } | Resource(_) | StatisticalPower(_)) => 2,
            CliError::Lib(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phi { common, t } => commands::phi(&common, t.map(|l| l.0)),
        Command::Psi { common, t, tol } => commands::psi(&common, t.map(|l| l.0), tol),
        Command::Tail { common, t } => commands::tail(&common, t.map(|l| l.0)),
        Command::Density { common, grid, tol, x_lo, x_hi, max_iter } => commands::density(&common, grid, tol, x_lo, x_hi, max_iter),
        Command::Simulate { common, n, seed, eps, exact, t, raw } => commands::simulate(&common, n, seed, eps, exact, t.map(|l| l.0), raw),
        Command::Validate { common, n, seed, eps, t } => validate::validate(&common, n, seed, eps, t.map(|l| l.0)),
        Command::Moments { common, n } => commands::moments(&common, n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
