//! Command-line front end for the inductiveness checker: system configs,
//! `verify`, `bench` and `sample-check`.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_bench, cmd_sample_check, cmd_verify, sample_check, verify_system, BenchRow,
    BenchmarkReport, LoadedSystem, Manifest, ManifestEntry, SampleReport, SampleRow, VerifyFlags,
    VerifyReport, EXIT_ERROR, EXIT_PROVED, EXIT_REFUTED, EXIT_UNKNOWN,
};
pub use config::SystemConfig;

use bridgecheck_core::{BoundMethod, SplitKind};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bridgecheck_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ibp,
    Crown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    AllDims,
    LongestDim,
}

#[derive(Debug, Parser)]
#[command(
    name = "bridgecheck",
    version,
    about = "Check candidate inductive invariants of neural-network-controlled systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check init ⊆ candidate, candidate ⊆ safe, and inductiveness.
    Verify {
        config: PathBuf,
        #[arg(long, value_enum)]
        bound_method: Option<MethodArg>,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long)]
        max_splits: Option<u64>,
        #[arg(long)]
        min_width: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write one SMT-LIB script per environment check into this directory.
        #[arg(long, value_name = "DIR")]
        emit_smtlib: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        skip_init_safe: bool,
    },
    /// Verify every system in a manifest and print a summary table.
    Bench {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Also write the structured report to this file.
        #[arg(long, value_name = "FILE")]
        json_out: Option<PathBuf>,
    },
    /// Sample states from the candidate and look for transitions leaving it.
    SampleCheck {
        config: PathBuf,
        #[arg(short, long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Violation rows printed in table format.
        #[arg(long, default_value_t = 10)]
        max_rows: usize,
    },
}

/// Runs the command line, writing reports to `out` and diagnostics to `err`.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let stdout = |e| CliError::io(Path::new("<stdout>"), e);
    match command {
        Command::Verify {
            config,
            bound_method,
            split,
            max_splits,
            min_width,
            epsilon,
            emit_smtlib,
            format,
            skip_init_safe,
        } => {
            let flags = VerifyFlags {
                bound_method: bound_method.map(|m| match m {
                    MethodArg::Ibp => BoundMethod::Ibp,
                    MethodArg::Crown => BoundMethod::Crown,
                }),
                split: split.map(|s| match s {
                    SplitArg::AllDims => SplitKind::AllDims,
                    SplitArg::LongestDim => SplitKind::LongestDim,
                }),
                max_splits,
                min_width,
                epsilon,
                emit_smtlib,
                skip_init_safe,
            };
            let report = cmd_verify(&config, &flags)?;
            match format {
                Format::Table => write!(out, "{}", report.to_table()),
                Format::Structured => writeln!(out, "{}", report.to_json()),
            }
            .map_err(stdout)?;
            Ok(report.exit_code())
        }
        Command::Bench {
            manifest,
            format,
            json_out,
        } => {
            let report = cmd_bench(&manifest)?;
            match format {
                Format::Table => write!(out, "{}", report.to_table()),
                Format::Structured => writeln!(out, "{}", report.to_json()),
            }
            .map_err(stdout)?;
            if let Some(path) = json_out {
                std::fs::write(&path, report.to_json()).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(if report.has_errors() { EXIT_ERROR } else { 0 })
        }
        Command::SampleCheck {
            config,
            n,
            seed,
            format,
            max_rows,
        } => {
            let report = cmd_sample_check(&config, n, seed)?;
            match format {
                Format::Table => write!(out, "{}", report.to_table(max_rows)),
                Format::Structured => writeln!(out, "{}", report.to_json()),
            }
            .map_err(stdout)?;
            Ok(if report.violations > 0 {
                EXIT_REFUTED
            } else {
                0
            })
        }
    }
}
