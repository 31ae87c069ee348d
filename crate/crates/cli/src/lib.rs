//! Command-line front end: reads system descriptions, runs the analyses of
//! `diffstab-core` and writes text, JSON and CSV reports.
//!
//! Exit codes: 0 when the command completed (whatever the verdict), 2 for
//! usage and validation errors, 3 when an agent violates the
//! stabilizability/detectability assumption, 4 for numerical failures.

pub mod commands;
pub mod description;
pub mod error;
pub mod presets;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use diffstab_core::C64;

use crate::description::{Description, System};
use crate::error::{CliError, CliResult};
use crate::report::Report;

pub const TOL_ENV: &str = "DIFFSTAB_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "diffstab",
    version,
    about = "Internal stabilizability of diffusively coupled LTI agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shared-direction obstruction, pole directions and, with edge
    /// controllers, the four-block closed loop and cancellations.
    Analyze(AnalyzeArgs),
    /// Closed-loop trajectory as CSV plus an agreement summary.
    Simulate(Common),
    /// Coprime factors of one agent and its denominators at given points.
    Factorize(FactorizeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// System description (JSON).
    pub file: Option<PathBuf>,
    /// Use a built-in description instead of FILE.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    pub preset: Option<String>,
    /// Output path: the JSON report (analyze, factorize) or the CSV (simulate).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Rank/GCD tolerance; overrides the description and DIFFSTAB_TOL.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the validated description back out and stop.
    #[arg(long)]
    pub echo: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Analyze every *.json file in a directory.
    #[arg(long, conflicts_with_all = ["file", "preset", "echo"])]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Agent to factorize (1-based).
    #[arg(long, default_value_t = 1)]
    pub agent: usize,
    /// Points at which to evaluate M and M~, e.g. `0` or `1+2i`; repeatable
    /// or comma-separated. Defaults to the agent's unstable poles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = report::parse_complex)]
    pub lambda: Vec<C64>,
}

/// Tolerance override from the flag, else from the environment.
fn tol_override(flag: Option<f64>) -> CliResult<Option<f64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(TOL_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{TOL_ENV}: cannot read {v:?} as a number"))),
        Err(_) => Ok(None),
    }
}

pub fn load(path: &Path) -> CliResult<Description> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Description::parse(&text).map_err(|e| e.at(&path.display().to_string()))
}

fn source(c: &Common) -> CliResult<Description> {
    match (&c.file, &c.preset) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either FILE or --preset, not both".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "a description FILE or --preset NAME is required".into(),
        )),
        (None, Some(name)) => {
            let text = presets::get(name)
                .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
            Description::parse(text).map_err(|e| e.at(&format!("preset {name}")))
        }
        (Some(path), None) => load(path),
    }
}

/// Output streams of a run, so that tests can capture them.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, io: &mut Io) -> i32 {
    match dispatch(cli, io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, content: &[u8]) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Invalid(format!("cannot write output: {e}"))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Text (or JSON with `--json`) to stdout, JSON to `--out` when given.
fn emit(report: &Report, c: &Common, io: &mut Io) -> CliResult<()> {
    if c.json {
        writeln!(io.out, "{}", pretty(&report.json)).map_err(io_err)?;
    } else {
        write!(io.out, "{}", report.text).map_err(io_err)?;
    }
    if let Some(path) = &c.out {
        write_file(path, format!("{}\n", pretty(&report.json)).as_bytes())?;
    }
    Ok(())
}

fn echo(d: &Description, c: &Common, io: &mut Io) -> CliResult<i32> {
    // Validate before writing it back.
    d.build(tol_override(c.tol)?)?;
    let text = format!("{}\n", d.to_json());
    match &c.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => io.out.write_all(text.as_bytes()).map_err(io_err)?,
    }
    Ok(0)
}

fn system(c: &Common) -> CliResult<(Description, System)> {
    let d = source(c)?;
    let sys = d.build(tol_override(c.tol)?)?;
    Ok((d, sys))
}

fn dispatch(cli: Cli, io: &mut Io) -> CliResult<i32> {
    match cli.command {
        Command::Analyze(a) => {
            if let Some(dir) = &a.batch {
                return batch(dir, &a.common, io);
            }
            let c = &a.common;
            if c.echo {
                return echo(&source(c)?, c, io);
            }
            let (_, sys) = system(c)?;
            emit(&commands::analyze(&sys)?, c, io)?;
            Ok(0)
        }
        Command::Simulate(c) => {
            if c.echo {
                return echo(&source(&c)?, &c, io);
            }
            let (_, sys) = system(&c)?;
            let (traj, report) = commands::simulate(&sys)?;
            let mut csv = Vec::new();
            traj.write_csv(&mut csv).map_err(io_err)?;
            let summary = if c.json {
                format!("{}\n", pretty(&report.json))
            } else {
                report.text
            };
            match &c.out {
                Some(path) => {
                    write_file(path, &csv)?;
                    io.out.write_all(summary.as_bytes()).map_err(io_err)?;
                }
                None => {
                    io.out.write_all(&csv).map_err(io_err)?;
                    io.err.write_all(summary.as_bytes()).map_err(io_err)?;
                }
            }
            Ok(0)
        }
        Command::Factorize(f) => {
            let c = &f.common;
            if c.echo {
                return echo(&source(c)?, c, io);
            }
            let (_, sys) = system(c)?;
            emit(&commands::factorize(&sys, f.agent, &f.lambda)?, c, io)?;
            Ok(0)
        }
    }
}

/// Files are analyzed concurrently; reports are written in file-name order.
/// The exit code is the worst one over the files.
fn batch(dir: &Path, c: &Common, io: &mut Io) -> CliResult<i32> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no .json files in {}",
            dir.display()
        )));
    }
    let rank = tol_override(c.tol)?;
    let results: Vec<CliResult<Report>> = files
        .par_iter()
        .map(|p| {
            load(p)?
                .build(rank)
                .map_err(|e| e.at(&p.display().to_string()))
                .and_then(|s| commands::analyze(&s))
        })
        .collect();

    let mut worst = 0;
    let mut all = Vec::new();
    for (path, r) in files.iter().zip(results) {
        let name = path.display().to_string();
        match r {
            Ok(report) => {
                if !c.json {
                    writeln!(io.out, "== {name}").map_err(io_err)?;
                    write!(io.out, "{}", report.text).map_err(io_err)?;
                }
                all.push(json!({ "file": name, "exit_code": 0, "report": report.json }));
            }
            Err(e) => {
                worst = worst.max(e.exit_code());
                if !c.json {
                    writeln!(io.out, "== {name}").map_err(io_err)?;
                }
                writeln!(io.err, "error: {e}").map_err(io_err)?;
                all.push(
                    json!({ "file": name, "exit_code": e.exit_code(), "error": e.to_string() }),
                );
            }
        }
    }
    let summary =
        json!({ "schema": description::SCHEMA_VERSION, "command": "analyze", "batch": all });
    if c.json {
        writeln!(io.out, "{}", pretty(&summary)).map_err(io_err)?;
    }
    if let Some(path) = &c.out {
        write_file(path, format!("{}\n", pretty(&summary)).as_bytes())?;
    }
    Ok(worst)
}
