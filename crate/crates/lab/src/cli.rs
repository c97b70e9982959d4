//! Command line: `carleman-lab <command> [--config PATH] [--out DIR]
//! [--format text|json|csv] [--seed N] [--jobs N]`.
//!
//! Exit status 0 when every check passes, 1 when some check fails, 2 for
//! usage, configuration and IO errors.

use crate::config::ExperimentConfig;
use crate::executor::RayonExecutor;
use crate::report::{number, sweep_csv, VerificationReport};
use crate::suite::{self, plans, Stage};
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "carleman-lab",
    version,
    about = "Numerical checks of a quantitative Carleman estimate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML); the two dimensional Laplacian with
    /// defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for the report file and one CSV per sweep.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed of the sampled point sets; overrides the configuration.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(..=crate::config::MAX_SEED))]
    pub seed: Option<u64>,
    /// Worker threads; 0 picks the number of CPUs. Results do not depend on it.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// The constant chain and the admissibility margin.
    Constants,
    /// Pointwise and integral identities.
    Identities,
    /// Sampled assumption, weight and pointwise bounds, and the integral
    /// inequality for the conjugated operator.
    Bounds,
    /// Both sides of the Carleman inequality at `α₀`.
    Carleman,
    /// The Carleman inequality over a geometric `α` sweep, with CSV output.
    Sweep,
    /// Every stage.
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Identities => "identities",
            Command::Bounds => "bounds",
            Command::Carleman => "carleman",
            Command::Sweep => "sweep",
            Command::Suite => "suite",
        }
    }

    pub fn plan(self) -> &'static [Stage] {
        match self {
            Command::Constants => plans::CONSTANTS,
            Command::Identities => plans::IDENTITIES,
            Command::Bounds => plans::BOUNDS,
            Command::Carleman => plans::CARLEMAN,
            Command::Sweep => plans::SWEEP,
            Command::Suite => plans::SUITE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
        }
    };
    match run(&cli) {
        Ok((rendered, passed)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(rendered.as_bytes());
            let _ = stdout.flush();
            if passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
    }
}

/// Loads the configuration with command line overrides applied.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentConfig::laplacian(2),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Runs the command; returns the rendered report and the verdict.
pub fn run(cli: &Cli) -> Result<(String, bool), String> {
    let config = load_config(cli)?;
    let exec = RayonExecutor::new(cli.jobs).map_err(|e| e.to_string())?;
    let report = suite::run(cli.command.name(), &config, cli.command.plan(), &exec)
        .map_err(|e| e.to_string())?;
    let rendered = render(&report, cli.command, cli.format);
    // --out is kept out of the echoed configuration so it cannot change the report
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from));
    if let Some(dir) = dir {
        write_outputs(&dir, &report, &rendered, cli.format)
            .map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    for (stage, check) in report.failing_checks() {
        let note = check
            .note
            .as_deref()
            .map(|n| format!(" ({n})"))
            .unwrap_or_default();
        eprintln!(
            "failed: {stage}: {} = {} not {} {}{note}",
            check.name,
            number(check.value),
            check.relation.symbol(),
            number(check.tolerance)
        );
    }
    Ok((rendered, report.passed))
}

pub fn render(report: &VerificationReport, command: Command, format: Format) -> String {
    match (command, format) {
        (Command::Constants, Format::Text) => {
            let mut out = report.to_text();
            out.push_str(&constants_listing(report, true));
            out
        }
        (Command::Constants, Format::Csv) => constants_listing(report, false),
        (_, Format::Text) => report.to_text(),
        (_, Format::Json) => report.to_json(),
        (_, Format::Csv) => report.to_csv(),
    }
}

/// The constants report flattened to `key value` lines (aligned) or to a
/// `key,value` CSV.
fn constants_listing(report: &VerificationReport, aligned: bool) -> String {
    let mut flat = Vec::new();
    if let Some(stage) = report.stage("constants") {
        flatten("", &stage.details, &mut flat);
    }
    if aligned {
        let width = flat.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        flat.iter()
            .map(|(k, v)| format!("  {k:<width$}  {v}\n"))
            .collect()
    } else {
        let mut out = String::from("key,value\n");
        for (k, v) in &flat {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut Vec<(String, String)>) {
    use serde_json::Value;
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Number(n) => out.push((
            prefix.to_string(),
            n.as_f64().map(number).unwrap_or_else(|| n.to_string()),
        )),
        Value::Null => out.push((prefix.to_string(), "absent".into())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn write_outputs(
    dir: &Path,
    report: &VerificationReport,
    rendered: &str,
    format: Format,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("report.{}", format.extension())), rendered)?;
    for series in &report.sweeps {
        std::fs::write(
            dir.join(format!("sweep_u{}.csv", series.test_function)),
            sweep_csv(series),
        )?;
    }
    Ok(())
}
