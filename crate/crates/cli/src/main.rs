mod commands;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use commands::Exit;

/// Formulate, solve, certify and bound quantum state exclusion problems.
#[derive(Debug, Parser)]
#[command(name = "qexcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an exclusion SDP for an ensemble file.
    Solve(SolveArgs),
    /// Check whether a measurement is optimal for minimum-error exclusion.
    Certify(CertifyArgs),
    /// Compute a lower bound or necessary condition.
    Bound(BoundArgs),
    /// Analyse the PBR game.
    Pbr(PbrArgs),
    /// Write a derived operator list (discrimination set or m-subset sums).
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    MinError,
    Unambiguous,
    WorstCase,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for any randomized step; echoed in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock time in the report (makes reports run-dependent).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Exclude m states at once.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub gap_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long)]
    pub measurement: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WhichBound {
    Fidelity,
    Perm,
    Witness,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, value_enum)]
    pub which: WhichBound,
    #[arg(long, default_value_t = qexcl::certify::DEFAULT_WITNESS_EPS)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PbrMode {
    Analytic,
    Sdp,
    Both,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("angle").required(true).args(["theta", "theta_deg"])))]
pub struct PbrArgs {
    #[arg(long)]
    pub n: usize,
    /// Preparation angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Preparation angle in degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_deg: Option<f64>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub mode: PbrMode,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConvertTarget {
    Discrimination,
    MExclusion,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, value_enum)]
    pub to: ConvertTarget,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Input as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a, args),
        Command::Certify(a) => commands::certify(&a, args),
        Command::Bound(a) => commands::bound(&a, args),
        Command::Pbr(a) => commands::pbr(&a, args),
        Command::Convert(a) => commands::convert(&a),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    ExitCode::from(code as u8)
}
