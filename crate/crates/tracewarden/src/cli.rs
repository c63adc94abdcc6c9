//! Command-line frontend: `profile`, `detect`, `bench gen`, `eval`.
//!
//! Inputs are never mutated; diagnostics go to stderr; failure classes map
//! to distinct exit codes (see `CliError::exit_code`).

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use crate::bench::{self, BenchError, EvalError, Scenario, ScenarioSpec};
use crate::detector::{classify_all, DetectOptions, DetectionReport};
use crate::judge::{build_judge, Judge, JudgeConfig, JudgeError};
use crate::rules::{build_profile, BehaviorProfile, ProfileCodecError, RulesError};
use crate::trace::{parse_log, sessionize, ExecutionPath, IngestError};

#[derive(Debug, Parser)]
#[command(
    name = "tracewarden",
    version,
    about = "Profile agent tool-invocation traces and detect anomalous sessions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a behavior profile from trusted benign traces.
    Profile(ProfileArgs),
    /// Classify traces against a frozen profile.
    Detect(DetectArgs),
    /// Benchmark dataset utilities.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Score a detection report against gold labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Trace file (JSONL) of trusted benign sessions.
    #[arg(long)]
    pub traces: PathBuf,
    /// Where to write the profile document.
    #[arg(long)]
    pub out: PathBuf,
    /// Judge configuration file (defaults to the offline baseline).
    #[arg(long)]
    pub judge: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Profile document produced by `profile`.
    #[arg(long)]
    pub profile: PathBuf,
    /// Trace file (JSONL) to classify.
    #[arg(long)]
    pub traces: PathBuf,
    /// Where to write the report document.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub judge: Option<PathBuf>,
    /// Fail closed on judge errors (default).
    #[arg(long, overrides_with = "lenient")]
    pub strict: bool,
    /// Treat undecidable units as normal instead of anomalous.
    #[arg(long)]
    pub lenient: bool,
    /// Collect every finding per session instead of stopping at the first.
    #[arg(long)]
    pub exhaustive: bool,
    /// Worker threads for classification.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Generate a labeled benchmark dataset.
    Gen(BenchGenArgs),
}

#[derive(Debug, Args)]
pub struct BenchGenArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Generator seed; identical seeds reproduce the dataset byte for byte.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1300)]
    pub benign: usize,
    #[arg(long = "at-c1", default_value_t = 150)]
    pub at_c1: usize,
    #[arg(long = "at-c2", default_value_t = 150)]
    pub at_c2: usize,
    /// Output directory for traces.jsonl, labels.json and judge.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    Clinic,
    Procurement,
}

impl From<ScenarioArg> for Scenario {
    fn from(value: ScenarioArg) -> Self {
        match value {
            ScenarioArg::Clinic => Scenario::Clinic,
            ScenarioArg::Procurement => Scenario::Procurement,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Report document produced by `detect`.
    #[arg(long)]
    pub report: PathBuf,
    /// Labels sidecar produced by `bench gen`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    /// Optionally write the metrics document here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Schema(#[from] ProfileCodecError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("empty corpus: no valid sessions in input")]
    EmptyCorpus,
    #[error(transparent)]
    InvalidSpec(#[from] BenchError),
    #[error(transparent)]
    SessionMismatch(#[from] EvalError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Judge(_) => 4,
            CliError::Io { .. } => 5,
            CliError::EmptyCorpus => 6,
            CliError::SessionMismatch(_) => 7,
            CliError::InvalidSpec(_) => 8,
        }
    }
}

impl From<RulesError> for CliError {
    fn from(err: RulesError) -> Self {
        match err {
            RulesError::Hierarchy(_) => CliError::EmptyCorpus,
            RulesError::Judge(e) => CliError::Judge(e),
            other => CliError::Parse(other.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Profile(args) => run_profile(args),
        Command::Detect(args) => run_detect(args),
        Command::Bench(BenchCommand::Gen(args)) => run_bench_gen(args),
        Command::Eval(args) => run_eval(args),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn load_judge(path: &Option<PathBuf>) -> Result<(JudgeConfig, Box<dyn Judge>), CliError> {
    let config = match path {
        Some(p) => JudgeConfig::load(p)?,
        None => JudgeConfig::default(),
    };
    let judge = build_judge(&config)?;
    Ok((config, judge))
}

fn load_paths(path: &Path) -> Result<Vec<ExecutionPath>, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let outcome = parse_log(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io(source) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
    })?;
    for diag in &outcome.diagnostics {
        eprintln!("warning: {}:{}: {}", path.display(), diag.line, diag.reason);
    }
    let sessions = sessionize(outcome.calls);
    for rejected in &sessions.rejected {
        eprintln!(
            "warning: session {} rejected ({} calls): {}",
            rejected.session_id, rejected.call_count, rejected.reason
        );
    }
    Ok(sessions.paths)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn load_json(path: &Path) -> Result<Value, CliError> {
    let raw = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&raw).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn run_profile(args: ProfileArgs) -> Result<(), CliError> {
    let (config, judge) = load_judge(&args.judge)?;
    let paths = load_paths(&args.traces)?;
    if paths.is_empty() {
        return Err(CliError::EmptyCorpus);
    }
    let outcome = build_profile(&paths, judge.as_ref(), &config.scenario_label)?;
    for invalid in &outcome.invalid_paths {
        eprintln!(
            "warning: session {} excluded from profiling: {}",
            invalid.session_id,
            invalid.describe()
        );
    }
    write_file(&args.out, &outcome.profile.to_json_string())?;
    println!(
        "profiled {} sessions: {} tools, {} unit types ({} excluded)",
        paths.len(),
        outcome.profile.level_map.len(),
        outcome.profile.known_types.len(),
        outcome.invalid_paths.len()
    );
    Ok(())
}

fn run_detect(args: DetectArgs) -> Result<(), CliError> {
    let profile_doc = load_json(&args.profile)?;
    let profile = BehaviorProfile::from_document(&profile_doc)?;
    let (_, judge) = load_judge(&args.judge)?;
    let paths = load_paths(&args.traces)?;
    let opts = DetectOptions {
        strict: !args.lenient,
        exhaustive: args.exhaustive,
    };
    let verdicts = classify_all(&paths, &profile, judge.as_ref(), &opts, args.jobs);
    let report = DetectionReport::from_verdicts(verdicts);
    write_file(&args.out, &report.to_json_string())?;
    println!(
        "classified {} sessions: {} normal, {} structural, {} semantic",
        report.summary.total,
        report.summary.normal,
        report.summary.structural_anomaly,
        report.summary.semantic_anomaly
    );
    Ok(())
}

fn run_bench_gen(args: BenchGenArgs) -> Result<(), CliError> {
    let spec = ScenarioSpec {
        scenario: args.scenario.into(),
        benign: args.benign,
        at_c1: args.at_c1,
        at_c2: args.at_c2,
        seed: args.seed,
    };
    let dataset = bench::gen_dataset(&spec)?;

    let traces_path = args.out.join("traces.jsonl");
    write_file(&traces_path, &bench::dataset_to_jsonl(&dataset))?;

    // Profiling input: the benign subset on its own.
    let benign: Vec<_> = dataset
        .iter()
        .filter(|t| t.label == bench::TraceLabel::Benign)
        .cloned()
        .collect();
    let benign_path = args.out.join("benign.jsonl");
    write_file(&benign_path, &bench::dataset_to_jsonl(&benign))?;

    let labels_path = args.out.join("labels.json");
    let mut labels =
        serde_json::to_string_pretty(&bench::labels_document(&dataset)).expect("labels serialize");
    labels.push('\n');
    write_file(&labels_path, &labels)?;

    let judge_path = args.out.join("judge.json");
    let judge_config = bench::scenario_judge_config(spec.scenario);
    let mut judge_doc =
        serde_json::to_string_pretty(&judge_config).expect("judge config serializes");
    judge_doc.push('\n');
    write_file(&judge_path, &judge_doc)?;

    println!(
        "generated {} traces ({} benign, {} AT-C1, {} AT-C2) under {}",
        dataset.len(),
        spec.benign,
        spec.at_c1,
        spec.at_c2,
        args.out.display()
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let report_doc = load_json(&args.report)?;
    let report: DetectionReport = serde_json::from_value(report_doc)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.report.display())))?;
    let labels_doc = load_json(&args.labels)?;
    let gold = bench::parse_labels_document(&labels_doc)?;
    let metrics = bench::evaluate(&report.verdicts, &gold)?;

    match args.format {
        ReportFormat::Table => print!("{}", metrics.render_table()),
        ReportFormat::Json => print!("{}", metrics.to_json_string()),
    }
    if let Some(out) = &args.out {
        write_file(out, &metrics.to_json_string())?;
    }
    Ok(())
}
