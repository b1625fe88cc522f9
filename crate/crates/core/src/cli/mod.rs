//! The `dynsys` command line: `solve`, `check-morphism` and `laws`.
//!
//! Exit codes: 0 success, 1 input error, 2 a solution terminated early,
//! 3 a check failed.

mod commands;
mod spec_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::continuous::IntegrateOptions;
use crate::report::CheckReport;

pub use spec_file::{parse_cli_state, MapInput, SectionBase, SpecFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_TERMINATED: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
}

#[derive(Debug, Parser)]
#[command(name = "dynsys", version, about = "Solve dynamical systems and verify morphisms between them")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the solution through an initial state: a CSV trajectory for
    /// continuous systems, an element sequence for discrete ones.
    Solve {
        spec: PathBuf,
        /// Initial state (element name or comma-separated coordinates);
        /// defaults to the system file's basepoint.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a map relates the dynamics of two systems.
    CheckMorphism {
        source: PathBuf,
        target: PathBuf,
        /// One expression per target coordinate, or `name=name` for discrete
        /// systems. Repeatable.
        #[arg(long = "map", allow_hyphen_values = true)]
        map: Vec<String>,
        /// TOML file with a `map` entry (expression list or table).
        #[arg(long, conflicts_with = "map")]
        map_file: Option<PathBuf>,
        /// Also compare f applied to the solution through X0 with the solution
        /// through f(X0) up to time T (a horizon for discrete systems).
        #[arg(long, num_args = 2, value_names = ["X0", "T"], allow_hyphen_values = true)]
        preserve_solutions: Option<Vec<String>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the law checks that apply to each system.
    Laws {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
        /// State for solution checks; defaults to the system file's basepoint.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Check that the solution through the state closes up after this time.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        period_tol: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, default_value_t = 1e-9)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Relatedness tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Tolerance for comparing solutions.
    #[arg(long, default_value_t = 1e-5)]
    pub preserve_tol: f64,
    /// Number of steps for discrete systems.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Integration time for continuous systems (negative runs backward).
    #[arg(long, allow_negative_numbers = true)]
    pub span: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e8)]
    pub escape_threshold: f64,
    /// Number of sample points for relatedness checks.
    #[arg(long, default_value_t = crate::continuous::DEFAULT_SAMPLE_COUNT)]
    pub samples: usize,
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl Common {
    pub fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions {
            rtol: self.rtol,
            atol: self.atol,
            escape_threshold: self.escape_threshold,
            ..IntegrateOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub name: String,
    pub subject: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Entry {
    pub fn check(name: &str, subject: &str, report: CheckReport) -> Self {
        Entry {
            name: name.into(),
            subject: subject.into(),
            status: if report.passed() { Status::Pass } else { Status::Fail },
            report: Some(report),
            error: None,
            details: None,
        }
    }

    pub fn error(name: &str, subject: &str, message: impl std::fmt::Display) -> Self {
        Entry {
            name: name.into(),
            subject: subject.into(),
            status: Status::Error,
            report: None,
            error: Some(message.to_string()),
            details: None,
        }
    }

    pub fn from_result<E: std::fmt::Display>(name: &str, subject: &str, r: Result<CheckReport, E>) -> Self {
        match r {
            Ok(report) => Self::check(name, subject, report),
            Err(e) => Self::error(name, subject, e),
        }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }
}

/// Machine-readable record of a `check-morphism` or `laws` run.
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub config: Common,
    pub checks: Vec<Entry>,
}

impl ReportFile {
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.status == Status::Error) {
            EXIT_INPUT
        } else if self.checks.iter().any(|c| c.status == Status::Fail) {
            EXIT_FAILED
        } else {
            EXIT_OK
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INPUT
                }
            };
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match cli.command {
        Command::Solve { spec, x0, common } => commands::solve(&spec, x0.as_deref(), &common, out, err),
        Command::CheckMorphism { source, target, map, map_file, preserve_solutions, common } => {
            commands::check_morphism(
                &commands::MorphismArgs {
                    source: &source,
                    target: &target,
                    map: &map,
                    map_file: map_file.as_deref(),
                    preserve: preserve_solutions.as_deref(),
                },
                &common,
                echo,
                out,
                err,
            )
        }
        Command::Laws { specs, x0, period, period_tol, common } => {
            commands::laws(&specs, x0.as_deref(), period.map(|p| (p, period_tol)), &common, echo, out, err)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}
