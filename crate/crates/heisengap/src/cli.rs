//! Command line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heisengap_core::geometry::Shape;

use crate::config::{named_shape, EmitFormat, ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::harness::{run, Report};
use crate::report::emit_report;

#[derive(Debug, Parser)]
#[command(
    name = "heisengap",
    version,
    about = "Dirichlet/Neumann eigenvalue inequalities for magnetic and sub-Laplacians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel identities: lemma lattice, deficit mean, reproducing property,
    /// product kernels, boundary averages.
    Identities(RunArgs),
    /// Planar magnetic Laplacian: gaps and interval counts.
    Inequality2d(RunArgs),
    /// Sub-Laplacian on bounded cylinders.
    #[command(name = "inequality-heis")]
    InequalityHeis(RunArgs),
    /// Planar magnetic Laplacian with a Robin boundary density.
    Robin(RunArgs),
    /// Numerical replay of the trial-space argument.
    Replay(RunArgs),
    /// Periodic cylinder spectrum against its fiber union.
    #[command(name = "fiber-check")]
    FiberCheck(RunArgs),
}

impl Command {
    fn split(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Self::Identities(a) => (ExperimentKind::Identities, a),
            Self::Inequality2d(a) => (ExperimentKind::Inequality2d, a),
            Self::InequalityHeis(a) => (ExperimentKind::InequalityHeis, a),
            Self::Robin(a) => (ExperimentKind::Robin, a),
            Self::Replay(a) => (ExperimentKind::Replay, a),
            Self::FiberCheck(a) => (ExperimentKind::FiberCheck, a),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration; the built-in default of the subcommand otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field strengths, comma separated.
    #[arg(long = "B", value_delimiter = ',')]
    pub b: Vec<f64>,
    /// Landau indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Shape name (square, rectangle, disk, annulus, lshape) or JSON such as
    /// '{"shape":"disk","radius":1.5}'. Repeatable.
    #[arg(long)]
    pub shape: Vec<String>,
    /// Spacing ladder, coarsest first, as decimals or `1/n`.
    #[arg(long, value_delimiter = ',', value_parser = parse_spacing)]
    pub h: Vec<f64>,
    #[arg(long)]
    pub jmax: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output formats, comma separated.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub emit: Vec<EmitFormat>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn parse_spacing(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("spacing {s} must be positive"))
    }
}

fn parse_shape(kind: ExperimentKind, s: &str) -> Result<Shape> {
    if s.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    named_shape(kind, s).ok_or_else(|| HarnessError::Config(format!("unknown shape {s:?}")))
}

/// Effective configuration of a subcommand: file or default, then overrides.
pub fn resolve(kind: ExperimentKind, a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let cfg = ExperimentConfig::load(p)?;
            if cfg.kind != kind {
                return Err(HarnessError::Config(format!(
                    "{} holds a {} configuration",
                    p.display(),
                    cfg.kind.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig::default_for(kind),
    };
    if !a.b.is_empty() {
        cfg.physics.b = a.b.clone();
    }
    if !a.k.is_empty() {
        cfg.physics.k = a.k.clone();
    }
    if !a.shape.is_empty() {
        cfg.domain.shapes = a
            .shape
            .iter()
            .map(|s| parse_shape(kind, s))
            .collect::<Result<_>>()?;
        cfg.domain.file = None;
    }
    if !a.h.is_empty() {
        cfg.domain.h = a.h.clone();
    }
    if let Some(j) = a.jmax {
        cfg.solver.j_max = j;
        cfg.solver.m = cfg.solver.m.filter(|&m| m >= j + 2);
    }
    if let Some(s) = a.seed {
        cfg.solver.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output.dir = Some(o.clone());
    }
    if !a.emit.is_empty() {
        cfg.output.emit = a.emit.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_checks(out: &mut impl Write, report: &Report) -> std::io::Result<()> {
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let rel = serde_json::to_value(c.relation).ok();
        let rel = rel.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        writeln!(
            out,
            "{tag} {}: {:.6e} {rel} {:.6e}",
            c.name, c.value, c.bound
        )?;
    }
    let failed = report.failures().count();
    writeln!(
        out,
        "{}: {} checks, {} failed",
        report.kind.name(),
        report.checks.len(),
        failed
    )
}

fn execute(cmd: &Command) -> Result<bool> {
    let (kind, args) = cmd.split();
    let cfg = resolve(kind, args)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if args.print_config {
        writeln!(out, "{}", cfg.to_json()?).map_err(|e| HarnessError::io("<stdout>", e))?;
        return Ok(true);
    }
    let report = run(&cfg)?;
    let dir = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let formats = if cfg.output.emit.is_empty() {
        vec![EmitFormat::Json]
    } else {
        cfg.output.emit.clone()
    };
    let written = emit_report(&report, &dir, &formats)?;
    print_checks(&mut out, &report).map_err(|e| HarnessError::io("<stdout>", e))?;
    for p in written {
        writeln!(out, "wrote {}", p.display()).map_err(|e| HarnessError::io("<stdout>", e))?;
    }
    Ok(report.passed)
}

/// Runs the command line; exit code 0 iff every check passes, 1 on failed
/// checks, 2 on errors.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
