//! The `rankinfer` command line: CSV in, JSON envelope (or CSV table) out.
//!
//! Exit codes: 0 success, 2 malformed input or arguments, 3 a statistical
//! domain error (degenerate covariance, rank-deficient design, ...), 4 an
//! internal failure such as an unwritable output path.

mod commands;
mod envelope;
mod svg;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use crate::table::{Column, TableData, TableError};
pub use envelope::{digest, json_real, write_atomic, OutputEnvelope};
pub use svg::interval_chart;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MultCorr {
    Holm,
    Bonferroni,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input CSV file, or `-` for standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Output file (written atomically); standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for the bootstrap; drawn from OS entropy and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Column of point estimates.
    #[arg(long)]
    pub estimates: String,
    /// Column of standard errors (independent estimates).
    #[arg(long, conflicts_with = "cov", required_unless_present = "cov")]
    pub se: Option<String>,
    /// CSV file holding the full p x p covariance matrix (header row, then p rows).
    #[arg(long)]
    pub cov: Option<PathBuf>,
    /// Column of population names.
    #[arg(long)]
    pub label: Option<String>,
    /// Bootstrap draws.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integer and fractional ranks of a column.
    Ranks {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        column: String,
        /// Tie parameter: 0 gives the smallest rank to ties, 1 the largest, 0.5 mid-ranks.
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Rank 1 goes to the smallest value.
        #[arg(long, conflicts_with = "decreasing")]
        increasing: bool,
        /// Rank 1 goes to the largest value (default).
        #[arg(long)]
        decreasing: bool,
        /// Rank each value against this column instead of against its own column.
        #[arg(long)]
        against: Option<String>,
        #[arg(long)]
        label: Option<String>,
    },
    /// Marginal or simultaneous confidence sets for ranks from estimates and standard errors.
    CsRanks {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        est: EstimateArgs,
        /// Simultaneous sets (all ranks covered jointly) instead of marginal ones.
        #[arg(long)]
        simul: bool,
        /// 1-based populations to report, comma separated.
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
        /// Also write an SVG interval chart here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Confidence set for the tau best populations.
    CsTaubest {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(long)]
        tau: usize,
    },
    /// Confidence set for the tau worst populations.
    CsTauworst {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(long)]
        tau: usize,
    },
    /// Finite-sample confidence sets for ranks of multinomial category probabilities.
    CsMultinom {
        #[command(flatten)]
        common: CommonArgs,
        /// Column of category counts.
        #[arg(long)]
        counts: String,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        simul: bool,
        #[arg(long, value_enum, default_value_t = MultCorr::Holm)]
        multcorr: MultCorr,
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
    },
    /// Regression with ranked variables and corrected standard errors.
    RankReg {
        #[command(flatten)]
        common: CommonArgs,
        /// Model formula, e.g. "r(child) ~ r(parent) + w" or "r(y) ~ (r(x) + w):g".
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
    },
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "rankinfer",
    version,
    about = "Inference on ranks: confidence sets and rank regressions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(stdout, "{e}").map_err(|e| CliError::Internal(e.to_string()))?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Input(e.render().to_string())),
    };
    commands::execute(cli.command, stdin, stdout)
}

/// Entry point for the binary: runs on the process arguments and returns the exit code.
pub fn main() -> i32 {
    if let Some(n) = std::env::var("RANKINFER_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    match run(std::env::args_os(), &mut stdin.lock(), &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.trim_end().trim_start_matches("error: "));
            e.exit_code()
        }
    }
}
