//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or environment
//! error. Every subcommand records its inputs in a `key=value` manifest
//! under the output directory (`--output-dir`, then the `output-dir` config
//! key, then `POLYSHRINK_OUTPUT_DIR`, then `out`).

mod commands;
pub mod config;
pub mod output;
mod report;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::estimators::CoefficientConvention;

pub const OUTPUT_DIR_ENV: &str = "POLYSHRINK_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A verification check failed; the report has already been written.
    Verification(String),
    /// The reader of standard output went away.
    BrokenPipe,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 1,
            CliError::BrokenPipe => 0,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Verification(msg) => f.write_str(msg),
            CliError::BrokenPipe => f.write_str("broken pipe"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::BrokenPipe;
        }
        CliError::Usage(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if let csv::ErrorKind::Io(io) = e.kind() {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return CliError::BrokenPipe;
            }
        }
        CliError::Usage(format!("csv error: {e}"))
    }
}

/// Estimator slot: `MLE` (or 0), `JS` (or 1), 2, 3, 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeArg(pub usize);

impl DegreeArg {
    pub fn label(&self) -> &'static str {
        ["MLE", "JS", "2", "3", "4"][self.0]
    }

    pub fn column(&self) -> String {
        match self.0 {
            0 => "ratio_MLE".into(),
            1 => "ratio_JS".into(),
            d => format!("ratio_deg{d}"),
        }
    }
}

impl FromStr for DegreeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("DEG").unwrap_or(&t);
        match t {
            "MLE" | "0" => Ok(DegreeArg(0)),
            "JS" | "1" => Ok(DegreeArg(1)),
            "2" | "3" | "4" => Ok(DegreeArg(t.parse().unwrap_or(0))),
            _ => Err(format!("expected MLE, JS, 2, 3 or 4, got {s:?}")),
        }
    }
}

impl fmt::Display for DegreeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    NegateGamma2,
}

#[derive(Debug, Parser)]
#[command(name = "polyshrink", version, about = "Exact and simulated risks of polynomial shrinkage estimators")]
pub struct Cli {
    /// Flat key = value file; flags take precedence over its entries.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for CSV files and manifests.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Risk of one estimator at one point, as a CSV row on stdout.
    Risk(RiskArgs),
    /// Risk-ratio table over a (lambda, omega) grid.
    Table(TableArgs),
    /// Risk ratios sampled uniformly in lambda.
    Curve(CurveArgs),
    /// Monte Carlo risks of several estimators with common random numbers.
    Simulate(SimulateArgs),
    /// Run the invariant suites and the published-table comparison.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct McArgs {
    #[arg(long)]
    pub replications: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chunk_size: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// MLE, JS, 2, 3 or 4.
    #[arg(long)]
    pub degree: Option<DegreeArg>,
    #[arg(long)]
    pub convention: Option<CoefficientConvention>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Reproduce published table 1 to 4.
    #[arg(long)]
    pub paper_table: Option<u8>,
    /// Comma-separated dimensions.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Comma-separated estimators, e.g. JS,2,3.
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub convention: Option<CoefficientConvention>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub mc: McArgs,
    /// Wide CSV path; the long-form CSV and manifest are written beside it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Preset 1 to 8 fixing p, omega and the estimators.
    #[arg(long)]
    pub figure: Option<u8>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Number of intervals; the curve has steps + 1 points.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub convention: Option<CoefficientConvention>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Defaults to every estimator admissible at p.
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub convention: Option<CoefficientConvention>,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Reduced grids and replication counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    ExitCode::from(run_with(args, &mut stdout.lock(), &mut stderr.lock()))
}

/// Like [`run`], writing to the given streams and returning the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(CliError::BrokenPipe) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
