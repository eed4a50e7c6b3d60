//! Command-line front end: `run`, `sweep` and `render`.
//!
//! Exit codes: 0 when every session recovered fully, 1 for usage or
//! configuration errors, 2 when any session lost data.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::metrics::{aggregate, SessionReport};
use crate::model::{
    FailureScenario, PathId, RationalCapacity, SlotAssignment, StrategyKind, EXTRA_PATH,
};
use crate::schedule::{build_schedule, TransmissionSchedule};
use crate::transport::{run_simulation, FailureModel, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA_LOSS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nps",
    version,
    about = "Single-link-failure protection with XOR network coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate sessions of one strategy and write a report.
    Run(RunArgs),
    /// One session per path count and failure position; capacity table and recovery matrix.
    Sweep(SweepArgs),
    /// Print the per-session slot layout.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub strategy: StrategyKind,
    #[arg(long)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub sessions: u64,
    /// none, path=P or random
    #[arg(long, default_value = "none")]
    pub fail: FailArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::model::DEFAULT_PAYLOAD_WIDTH)]
    pub payload_bytes: usize,
    /// Parity path for nps1-dedicated (defaults to the last path).
    #[arg(long)]
    pub dedicated_path: Option<PathId>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Line-delimited slot trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Omit to sweep all three strategies.
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    #[arg(long, default_value_t = 2)]
    pub paths_min: usize,
    #[arg(long, default_value_t = 8)]
    pub paths_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::model::DEFAULT_PAYLOAD_WIDTH)]
    pub payload_bytes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub strategy: StrategyKind,
    #[arg(long)]
    pub paths: usize,
    #[arg(long)]
    pub dedicated_path: Option<PathId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailArg {
    None,
    Path(PathId),
    Random,
}

impl FromStr for FailArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(FailArg::None),
            "random" => Ok(FailArg::Random),
            _ => s
                .strip_prefix("path=")
                .and_then(|p| p.parse().ok())
                .map(FailArg::Path)
                .ok_or_else(|| format!("expected none, random or path=P, got '{s}'")),
        }
    }
}

/// Inputs a report was produced from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest<C> {
    pub config: C,
    pub tool_version: String,
    /// SHA-256 of the config's compact JSON encoding, lowercase hex.
    pub config_hash: String,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(config: C) -> Self {
        let encoded = serde_json::to_vec(&config).expect("configs serialize");
        RunManifest {
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: hex::encode(Sha256::digest(&encoded)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    pub capacity: RationalCapacity,
    pub all_recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest<SimulationConfig>,
    pub sessions: Vec<SessionReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.aggregate.all_recovered {
            EXIT_OK
        } else {
            EXIT_DATA_LOSS
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub strategies: Vec<StrategyKind>,
    pub paths_min: usize,
    pub paths_max: usize,
    pub payload_width: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub strategy: StrategyKind,
    pub n: usize,
    pub capacity: RationalCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryCell {
    pub strategy: StrategyKind,
    pub n: usize,
    pub failed_path: Option<PathId>,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub manifest: RunManifest<SweepConfig>,
    pub capacity_table: Vec<CapacityRow>,
    pub recovery_matrix: Vec<RecoveryCell>,
    pub scenarios: usize,
    pub all_recovered: bool,
}

impl SweepReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_recovered {
            EXIT_OK
        } else {
            EXIT_DATA_LOSS
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Model(Error::Config(_) | Error::InvalidInput(_)) => EXIT_USAGE,
            CliError::Model(_) => EXIT_DATA_LOSS,
        }
    }
}

/// Resolves `run` flags into a simulation config.
pub fn run_config(args: &RunArgs) -> Result<SimulationConfig, CliError> {
    let dedicated_path = match (args.strategy, args.dedicated_path) {
        (StrategyKind::Nps1Dedicated, d) => Some(d.unwrap_or(args.paths)),
        (s, Some(_)) => {
            return Err(CliError::Usage(format!(
                "--dedicated-path is not valid with {s}"
            )))
        }
        (_, None) => None,
    };
    let failure = match args.fail {
        FailArg::None => FailureModel::Fixed(FailureScenario::none()),
        FailArg::Path(p) => FailureModel::Fixed(FailureScenario::always(p)),
        FailArg::Random => FailureModel::RandomPerSession { seed: args.seed },
    };
    let config = SimulationConfig {
        n: args.paths,
        strategy: args.strategy,
        dedicated_path,
        sessions: args.sessions,
        failure,
        payload_width: args.payload_bytes,
        rng_seed: args.seed,
    };
    config.schedule()?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
}

fn emit_json<T: Serialize>(
    value: &T,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(path) => {
            let mut file = create(path)?;
            file.write_all(text.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| CliError::Io {
                    path: path.to_owned(),
                    source,
                })
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<RunReport, CliError> {
    let config = run_config(args)?;
    let (trace, sessions) = run_simulation(&config)?;
    let (capacity, all_recovered) = aggregate(&sessions);
    let report = RunReport {
        manifest: RunManifest::new(config),
        sessions,
        aggregate: Aggregate {
            capacity,
            all_recovered,
        },
    };
    if let Some(path) = &args.trace {
        let mut file = create(path)?;
        trace
            .write_jsonl(&mut file, &report.manifest.config_hash)
            .and_then(|_| file.flush())
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
    }
    emit_json(&report, args.out.as_deref(), stdout)?;
    Ok(report)
}

/// Runs the exhaustive sweep without writing anything.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport, CliError> {
    if config.paths_min > config.paths_max {
        return Err(CliError::Usage(format!(
            "--paths-min {} exceeds --paths-max {}",
            config.paths_min, config.paths_max
        )));
    }
    let mut capacity_table = Vec::new();
    let mut recovery_matrix = Vec::new();
    for &strategy in &config.strategies {
        for n in config.paths_min..=config.paths_max {
            let sim = SimulationConfig::new(strategy, n)
                .with_failure(FailureModel::ExhaustiveSweep)
                .with_payload_width(config.payload_width)
                .with_seed(config.rng_seed);
            let (_, reports) = run_simulation(&sim)?;
            let schedule = sim.schedule()?;
            capacity_table.push(CapacityRow {
                strategy,
                n,
                capacity: crate::metrics::normalized_capacity(&schedule),
            });
            recovery_matrix.extend(reports.iter().map(|r| RecoveryCell {
                strategy,
                n,
                failed_path: r.failed_path,
                recovered: r.recovery_success,
            }));
        }
    }
    let all_recovered = recovery_matrix.iter().all(|c| c.recovered);
    Ok(SweepReport {
        manifest: RunManifest::new(config.clone()),
        scenarios: recovery_matrix.len(),
        capacity_table,
        recovery_matrix,
        all_recovered,
    })
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<SweepReport, CliError> {
    let config = SweepConfig {
        strategies: args
            .strategy
            .map_or_else(|| StrategyKind::ALL.to_vec(), |s| vec![s]),
        paths_min: args.paths_min,
        paths_max: args.paths_max,
        payload_width: args.payload_bytes,
        rng_seed: args.seed,
    };
    let report = sweep(&config)?;
    emit_json(&report, args.out.as_deref(), stdout)?;
    Ok(report)
}

fn path_label(path: PathId) -> String {
    if path == EXTRA_PATH {
        "s -> r".to_string()
    } else {
        format!("s{path} -> r{path}")
    }
}

/// Text matrix of a schedule: one row per path, one column per round.
/// Own units print as `x<source>^<index>`, parity as `y<round>`.
pub fn render_schedule(schedule: &TransmissionSchedule) -> String {
    let rounds = schedule.rounds();
    let mut rows: Vec<Vec<String>> = vec![std::iter::once(String::new())
        .chain((1..=rounds).map(|r| format!("round {r}")))
        .collect()];
    for &path in schedule.paths() {
        let row = schedule.row(path).expect("listed paths have rows");
        let cells = row.iter().enumerate().map(|(i, slot)| match slot {
            SlotAssignment::OwnData(d) => format!("x{path}^{d}"),
            SlotAssignment::Parity => format!("y{}", i + 1),
            SlotAssignment::Idle => "-".to_string(),
        });
        rows.push(std::iter::once(path_label(path)).chain(cells).collect());
    }
    let widths: Vec<usize> = (0..=rounds)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

pub fn cmd_render(args: &RenderArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dedicated = match args.strategy {
        StrategyKind::Nps1Dedicated => Some(args.dedicated_path.unwrap_or(args.paths)),
        _ => args.dedicated_path,
    };
    let schedule = build_schedule(args.strategy, args.paths, dedicated)?;
    stdout
        .write_all(render_schedule(&schedule).as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, stdout).map(|r| r.exit_code()),
        Command::Sweep(args) => cmd_sweep(args, stdout).map(|r| r.exit_code()),
        Command::Render(args) => cmd_render(args, stdout).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            std::iter::once("nps").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn fail_arg_parsing() {
        assert_eq!("none".parse::<FailArg>(), Ok(FailArg::None));
        assert_eq!("random".parse::<FailArg>(), Ok(FailArg::Random));
        assert_eq!("path=3".parse::<FailArg>(), Ok(FailArg::Path(3)));
        assert!("path=".parse::<FailArg>().is_err());
        assert!("path=x".parse::<FailArg>().is_err());
        assert!("always".parse::<FailArg>().is_err());
    }

    #[test]
    fn render_rotating_n3() {
        let (code, out, _) = run(&["render", "--strategy", "nps2", "--paths", "3"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 4);
        let row3: Vec<&str> = lines[3].split_whitespace().collect();
        assert_eq!(row3, ["s3", "->", "r3", "y1", "x3^1", "x3^2"]);
        let row1: Vec<&str> = lines[1].split_whitespace().collect();
        assert_eq!(row1, ["s1", "->", "r1", "x1^1", "x1^2", "y3"]);
    }

    #[test]
    fn render_extra_n2() {
        let (_, out, _) = run(&["render", "--strategy", "nps1-extra", "--paths", "2"]);
        let rows: Vec<&str> = out.lines().skip(1).collect();
        assert_eq!(rows.len(), 3);
        let extra: Vec<&str> = rows[2].split_whitespace().collect();
        assert_eq!(extra, ["s", "->", "r", "y1", "y2"]);
    }

    #[test]
    fn render_dedicated_middle_row() {
        let (_, out, _) = run(&[
            "render",
            "--strategy",
            "nps1-dedicated",
            "--paths",
            "3",
            "--dedicated-path",
            "2",
        ]);
        let rows: Vec<&str> = out.lines().skip(1).collect();
        let cells = |row: &str| {
            row.split_whitespace()
                .skip(3)
                .map(str::to_string)
                .collect::<Vec<_>>()
        };
        assert_eq!(cells(rows[1]), ["y1", "y2", "y3"]);
        assert_eq!(cells(rows[0]), ["x1^1", "x1^2", "x1^3"]);
        assert_eq!(cells(rows[2]), ["x3^1", "x3^2", "x3^3"]);
    }

    #[test]
    fn dedicated_path_with_wrong_strategy_is_usage_error() {
        let (code, _, err) = run(&[
            "run",
            "--strategy",
            "nps2",
            "--paths",
            "3",
            "--dedicated-path",
            "2",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--dedicated-path"));
    }

    #[test]
    fn single_path_is_rejected() {
        let (code, _, _) = run(&["run", "--strategy", "nps1-extra", "--paths", "1"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, _) = run(&["run", "--strategy", "nps2", "--paths", "3", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run(&["run", "--strategy", "raid5", "--paths", "3"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn failed_path_outside_schedule_is_usage_error() {
        let (code, _, _) = run(&[
            "run",
            "--strategy",
            "nps2",
            "--paths",
            "3",
            "--fail",
            "path=0",
        ]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run(&[
            "run",
            "--strategy",
            "nps1-extra",
            "--paths",
            "3",
            "--fail",
            "path=0",
        ]);
        assert_eq!(code, EXIT_OK);
    }

    #[test]
    fn manifest_hash_tracks_config() {
        let a = RunManifest::new(SimulationConfig::new(StrategyKind::Nps2Rotating, 4));
        let b = RunManifest::new(SimulationConfig::new(StrategyKind::Nps2Rotating, 4));
        let c = RunManifest::new(SimulationConfig::new(StrategyKind::Nps2Rotating, 5));
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn report_exit_code_follows_content() {
        let (code, out, _) = run(&[
            "run",
            "--strategy",
            "nps2",
            "--paths",
            "3",
            "--sessions",
            "2",
        ]);
        assert_eq!(code, EXIT_OK);
        let mut report: RunReport = serde_json::from_str(&out).unwrap();
        assert_eq!(report.exit_code(), EXIT_OK);
        report.aggregate.all_recovered = false;
        assert_eq!(report.exit_code(), EXIT_DATA_LOSS);
    }
}
