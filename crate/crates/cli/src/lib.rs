//! Command-line front end: single points, sweeps, trends, protocol
//! comparison and the self-validation suite.
//!
//! Exit codes: 0 success, 1 I/O failure or failed validation, 2 usage error,
//! 3 domain error, 4 impossible heralding outcome.

pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpr_core::sweep::Comparison;
use cpr_core::validation::run_checks;
use cpr_core::{
    ArrangementMode, Error, Evaluator, Mode, ProtocolKind, ProtocolSetup, SweepRecord,
    TruncationPolicy,
};
use serde::Serialize;
use thiserror::Error;

use output::Metadata;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_IMPOSSIBLE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0} of {1} validation checks failed")]
    Validation(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::ImpossibleOutcome(_)) => EXIT_IMPOSSIBLE,
            CliError::Core(_) => EXIT_DOMAIN,
            CliError::Io(_) | CliError::Csv(_) | CliError::Parse(_) | CliError::Validation(..) => {
                EXIT_FAILURE
            }
        }
    }
}

/// `min:max:step`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, step] = parts.as_slice() else {
            return Err(format!("grid '{s}' must look like min:max:step"));
        };
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number '{v}' in grid '{s}'"));
        let spec = GridSpec {
            min: parse(min)?,
            max: parse(max)?,
            step: parse(step)?,
        };
        if !(spec.min < spec.max) {
            return Err(format!("grid '{s}' needs min < max"));
        }
        if !(spec.step > 0.0) || spec.points().len() < 2 {
            return Err(format!("grid '{s}' must contain at least two points"));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolArg {
    Pr,
    Pa,
    Ps,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Pr => ProtocolKind::Pr,
            ProtocolArg::Pa => ProtocolKind::Pa,
            ProtocolArg::Ps => ProtocolKind::Ps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrangementArg {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cpr", version, about = "Cascaded photon replacement on two-mode squeezed vacuum")]
pub struct Cli {
    /// Cap on worker threads used by sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measures at a single (protocol, k, lambda, t) point.
    State(StateArgs),
    /// Measures over a lambda x t grid.
    Sweep(SweepArgs),
    /// Entanglement-maximizing transmissivity for k = 1..k_max.
    Trend(TrendArgs),
    /// PR, PA and PS side by side with symmetric arrangements.
    Compare(CompareArgs),
    /// Run the internal consistency checks.
    Validate,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolOpts {
    #[arg(long, value_enum, default_value = "pr")]
    pub protocol: ProtocolArg,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Defaults to symmetric for PA/PS with even k, otherwise asymmetric.
    #[arg(long, value_enum)]
    pub arrangement: Option<ArrangementArg>,
    /// Target mode of an asymmetric arrangement.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub mode: u8,
}

impl ProtocolOpts {
    pub fn setup(&self) -> Result<ProtocolSetup, CliError> {
        let kind = self.protocol.into();
        let arrangement = match self.arrangement {
            None => return Ok(ProtocolSetup::default_for(kind, self.k)),
            Some(ArrangementArg::Symmetric) => ArrangementMode::Symmetric,
            Some(ArrangementArg::Asymmetric) => ArrangementMode::Asymmetric(Mode::from_index(self.mode)?),
        };
        Ok(ProtocolSetup::new(kind, self.k, arrangement))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputOpts {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = cpr_core::fock_core::DEFAULT_TAIL_TOLERANCE)]
    pub tail_tolerance: f64,
}

impl OutputOpts {
    fn evaluator(&self) -> Result<Evaluator, CliError> {
        Ok(Evaluator::new(TruncationPolicy::with_tail_tolerance(self.tail_tolerance)?))
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[command(flatten)]
    pub protocol: ProtocolOpts,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub protocol: ProtocolOpts,
    /// Single lambda; overrides --lambda-grid.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub lambda_grid: GridSpec,
    /// Single t; overrides --t-grid.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    pub t_grid: GridSpec,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrendArgs {
    #[arg(long, value_enum, default_value = "pr")]
    pub protocol: ProtocolArg,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value = "0.01:0.99:0.01")]
    pub t_grid: GridSpec,
    #[command(flatten)]
    pub output: OutputOpts,
}

fn emit_records<C: Serialize>(
    command: &str,
    config: &C,
    opts: &OutputOpts,
    records: &[SweepRecord],
    footer: &[String],
) -> Result<(), CliError> {
    let mut sink = opts.sink()?;
    match opts.format {
        Format::Csv => output::write_sweep_csv(&mut sink, records, footer)?,
        Format::Json => output::write_sweep_json(&mut sink, &Metadata::new(command, config), records)?,
    }
    sink.flush()?;
    Ok(())
}

pub fn run_state(args: &StateArgs) -> Result<(), CliError> {
    let setup = args.protocol.setup()?;
    let measures = args.output.evaluator()?.evaluate(&setup, args.lambda, args.t)?;
    let record = SweepRecord {
        protocol: setup.kind,
        k: setup.k,
        lambda: args.lambda,
        t: args.t,
        measures: Some(measures),
    };
    emit_records("state", args, &args.output, &[record], &[])
}

pub fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let setup = args.protocol.setup()?;
    let lambdas = args.lambda.map_or_else(|| args.lambda_grid.points(), |l| vec![l]);
    let ts = args.t.map_or_else(|| args.t_grid.points(), |t| vec![t]);
    let records = args.output.evaluator()?.grid_sweep(&setup, &lambdas, &ts)?;
    emit_records("sweep", args, &args.output, &records, &[])
}

pub fn run_trend(args: &TrendArgs) -> Result<(), CliError> {
    let trend = args
        .output
        .evaluator()?
        .trend(args.protocol.into(), args.k_max, args.lambda)?;
    let mut sink = args.output.sink()?;
    match args.output.format {
        Format::Csv => output::write_trend_csv(&mut sink, &trend)?,
        Format::Json => output::write_trend_json(&mut sink, &Metadata::new("trend", args), &trend)?,
    }
    sink.flush()?;
    Ok(())
}

pub fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let Comparison { pr, pa, ps } =
        args.output
            .evaluator()?
            .compare_protocols(args.k, args.lambda, &args.t_grid.points())?;
    let records: Vec<SweepRecord> = pr.into_iter().chain(pa).chain(ps).collect();
    emit_records("compare", args, &args.output, &records, &[])
}

/// Prints one line per check; fails when any check fails.
pub fn run_validate<W: Write>(mut out: W) -> Result<(), CliError> {
    let checks = run_checks();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", c.name, c.detail)?;
    }
    if failed > 0 {
        return Err(CliError::Validation(failed, checks.len()));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // only fails if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::State(a) => run_state(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Trend(a) => run_trend(a),
        Command::Compare(a) => run_compare(a),
        Command::Validate => run_validate(io::stdout().lock()),
    }
}
