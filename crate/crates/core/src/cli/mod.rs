//! Batch front end: subcommands, configuration and reports.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{GeomError, Result};
use config::{parse_range, set_tolerance, ConfigFile, Format, GridSpec, RunConfig};
use report::Report;

#[derive(Debug, Parser)]
#[command(name = "isocurv", version, about = "Principal-curvature analyses of hypersurfaces of S^n x R and H^n x R")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shape data, structure equations and eigenstructure over a grid.
    Analyze(Common),
    /// Parallel family, transported curvatures and the constant-curvature criterion.
    Parallel(Common),
    /// Smooth eigenframe of the shape operator with continuity metrics.
    Frame(Common),
    /// Profile ODE residuals and rotational case constraints.
    Ode(Common),
    /// Validation of the whole catalog.
    Suite(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog entry or generic chart name.
    #[arg(long)]
    pub entry: Option<String>,
    /// `N`, `N1xN2...` or `lo:hi:N,...`.
    #[arg(long)]
    pub grid: Option<String>,
    /// `A:B:N`.
    #[arg(long = "t-range", allow_hyphen_values = true)]
    pub t_range: Option<String>,
    /// `NAME=VALUE`, repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// List catalog and generic chart names, then exit.
    #[arg(long)]
    pub list: bool,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Analyze(c) => ("analyze", c),
            Command::Parallel(c) => ("parallel", c),
            Command::Frame(c) => ("frame", c),
            Command::Ode(c) => ("ode", c),
            Command::Suite(c) => ("suite", c),
        }
    }
}

/// Merges the config file with the flags.
pub fn build_config(name: &str, common: &Common) -> Result<RunConfig> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut cfg = RunConfig::new(name, file)?;
    if let Some(e) = &common.entry {
        cfg.entry = Some(e.clone());
        cfg.chart = None;
    }
    if let Some(g) = &common.grid {
        cfg.grid = Some(GridSpec::parse(g)?);
    }
    if let Some(t) = &common.t_range {
        cfg.t_range = Some(parse_range(t)?);
    }
    for item in &common.tol {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| GeomError::Config(format!("bad --tol `{item}`, expected NAME=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| GeomError::Config(format!("bad tolerance value in `{item}`")))?;
        set_tolerance(&mut cfg.tolerances, k.trim(), v)?;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.csv.is_some() {
        cfg.csv = common.csv.clone();
    }
    if let Some(f) = common.format {
        cfg.format = f;
    }
    Ok(cfg)
}

/// Runs one command and writes its outputs.
pub fn execute(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new(&cfg.command, cfg);
    match cfg.command.as_str() {
        "analyze" => commands::cmd_analyze(cfg, &mut report)?,
        "parallel" => {
            let rows = commands::cmd_parallel(cfg, &mut report)?;
            if let Some(path) = &cfg.csv {
                std::fs::write(path, commands::render_csv(&rows))
                    .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
            }
        }
        "frame" => commands::cmd_frame(cfg, &mut report)?,
        "ode" => commands::cmd_ode(cfg, &mut report)?,
        "suite" => commands::cmd_suite(cfg, &mut report)?,
        other => return Err(GeomError::Usage(format!("unknown command `{other}`"))),
    }
    Ok(report)
}

fn render(cfg: &RunConfig, report: &Report) -> String {
    match cfg.format {
        Format::Text => report.render_text(),
        Format::Structured => report.render_structured(),
    }
}

fn listing() -> String {
    let mut s = String::new();
    for e in crate::catalog::default_catalog() {
        s.push_str(&e.name);
        s.push('\n');
    }
    for c in crate::catalog::generic_graphs() {
        s.push_str(c.name());
        s.push('\n');
    }
    s
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, common) = cli.command.parts();
    if common.list {
        print!("{}", listing());
        return 0;
    }
    let outcome = build_config(name, common).and_then(|cfg| {
        let report = execute(&cfg)?;
        let text = render(&cfg, &report);
        match &cfg.out {
            Some(p) => std::fs::write(p, &text).map_err(|e| GeomError::Io(format!("{}: {e}", p.display())))?,
            None => print!("{text}"),
        }
        Ok(report.exit_code())
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("isocurv: {e}");
            e.exit_code()
        }
    }
}
