//! Batch frontend for the tracking and captioning pipeline. Five
//! subcommands cover the full life cycle: `track` produces trajectories,
//! `annotate` adds the semantic fields, `eval` scores predictions against
//! ground truth, `stats` profiles a corpus, and `ablate` sweeps label
//! spaces, selectors, and grounding modes.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 backend, 5 internal.

mod backend;
mod commands;
mod parallel;
mod reporting;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semtrack::interact::Selector;
use semtrack::io::config::{load_config, PipelineConfig};
use semtrack::label_space::LabelSpaceName;
use semtrack::render::GroundingMode;

/// Errors surfaced to the shell. Usage mistakes are separated from library
/// failures so scripts can tell a bad invocation from bad data or a model
/// service outage.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(semtrack::Error),
    Internal(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => classify(e),
            CliError::Internal(_) => 5,
        }
    }
}

impl From<semtrack::Error> for CliError {
    fn from(e: semtrack::Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

/// Map a library error to an exit code: backend and schema failures are 4,
/// everything else (bad files, bad values, io) is 3. Stage wrappers defer
/// to the failure they carry.
fn classify(e: &semtrack::Error) -> u8 {
    use semtrack::Error as E;
    match e {
        E::Stage { source, .. } | E::StageOther { source, .. } => classify(source),
        E::Backend { .. } | E::SchemaViolation { .. } => 4,
        E::Invalid { .. } | E::Data { .. } | E::Record { .. } | E::Io { .. } | E::Validation(_) => 3,
    }
}

/// Stderr logger for library warnings (e.g. a predicate whose alignment
/// failed); keeps the binary free of logging configuration.
struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

#[derive(Parser)]
#[command(
    name = "semtrack",
    version,
    about = "Semantic multi-object tracking: trajectories, captions, interactions, and their metrics"
)]
struct Cli {
    /// Pipeline configuration file (TOML); defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for corpus-level commands (default: available cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track every person through a frame directory and write a tracks file
    Track(TrackArgs),
    /// Fill a tracks file with summary, captions, and interactions
    Annotate(AnnotateArgs),
    /// Score a prediction corpus against ground truth
    Eval(EvalArgs),
    /// Profile the interaction-label distribution of an annotation corpus
    Stats(StatsArgs),
    /// Sweep label spaces, selectors, and grounding modes over predictions
    Ablate(AblateArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Frame directory: zero-padded decimal indices, one PNG per frame
    #[arg(long, value_name = "DIR")]
    frames: PathBuf,

    /// Backend spec; detection and mask propagation accept only fixture:FILE
    #[arg(long, value_name = "SPEC")]
    backend: String,

    /// Output tracks file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Video id recorded in the output (default: frame directory name)
    #[arg(long, value_name = "ID")]
    video_id: Option<String>,

    /// Store only per-frame boxes, dropping the masks
    #[arg(long)]
    boxes_only: bool,
}

#[derive(Args)]
struct AnnotateArgs {
    /// Frame directory the tracks were produced from
    #[arg(long, value_name = "DIR")]
    frames: PathBuf,

    /// Tracks file to annotate
    #[arg(long, value_name = "FILE")]
    tracks: PathBuf,

    /// Backend spec: fixture:SCRIPT, replay:TRANSCRIPT, or remote:
    #[arg(long, value_name = "SPEC")]
    backend: String,

    /// Output annotation file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Record every backend exchange into a transcript for later replay
    #[arg(long, value_name = "FILE")]
    record: Option<PathBuf>,

    /// How the aligned label is chosen: llm, top1-cosine, or top5-cosine
    #[arg(long, value_parser = parse_selector, value_name = "SELECTOR")]
    selector: Option<Selector>,

    /// Project interaction labels into this space before writing
    #[arg(long, value_parser = parse_label_space, value_name = "SPACE")]
    label_space: Option<LabelSpaceName>,

    /// Grounding style for instance-caption clips
    #[arg(long, value_parser = parse_grounding, value_name = "MODE")]
    grounding: Option<GroundingMode>,

    /// Uniform frame stride for backend payloads
    #[arg(long, value_name = "N")]
    stride: Option<usize>,

    /// Candidates retrieved per predicate
    #[arg(long, value_name = "K")]
    top_k: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth annotation directory
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,

    /// Predicted annotation directory
    #[arg(long, value_name = "DIR")]
    pred: PathBuf,

    /// Output report file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Label space interactions are scored in
    #[arg(long, value_parser = parse_label_space, value_name = "SPACE")]
    label_space: Option<LabelSpaceName>,
}

#[derive(Args)]
struct StatsArgs {
    /// Annotation directory to profile
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,

    /// Output distribution file; omit for stdout-only
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Ranking rows printed to stdout
    #[arg(long, value_name = "N", default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct AblateArgs {
    /// Predicted annotation directory (tracks, captions, stored predicates)
    #[arg(long, value_name = "DIR")]
    pred: PathBuf,

    /// Ground-truth annotation directory
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,

    /// Backend spec for re-running alignment: fixture:, replay:, or remote:
    #[arg(long, value_name = "SPEC")]
    backend: String,

    /// Output ablation table
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Grounding mode to re-render clips in; repeat for several modes
    #[arg(long = "grounding", value_parser = parse_grounding, value_name = "MODE")]
    grounding: Vec<GroundingMode>,

    /// Root holding one frame directory per video id; required by --grounding
    #[arg(long, value_name = "DIR")]
    frames_root: Option<PathBuf>,

    /// Write the re-rendered clips under DIR/<video>/<mode>/<identity>/
    #[arg(long, value_name = "DIR")]
    clips_out: Option<PathBuf>,
}

fn parse_selector(s: &str) -> Result<Selector, String> {
    s.parse().map_err(|e: semtrack::Error| e.to_string())
}

fn parse_label_space(s: &str) -> Result<LabelSpaceName, String> {
    s.parse().map_err(|e: semtrack::Error| e.to_string())
}

fn parse_grounding(s: &str) -> Result<GroundingMode, String> {
    s.parse().map_err(|e: semtrack::Error| e.to_string())
}

/// Effective worker count for corpus commands.
fn job_count(requested: Option<usize>) -> usize {
    match requested {
        Some(n) => n.max(1),
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

/// Common context threaded into every command: the parsed config plus the
/// global flag echo destined for report metadata.
pub struct Context {
    pub config: PipelineConfig,
    pub jobs: usize,
    pub flags: BTreeMap<String, String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    let mut flags = BTreeMap::new();
    if let Some(path) = &cli.config {
        flags.insert("config".into(), path.display().to_string());
    }
    if let Some(jobs) = cli.jobs {
        flags.insert("jobs".into(), jobs.to_string());
    }
    let ctx = Context {
        config,
        jobs: job_count(cli.jobs),
        flags,
    };
    match cli.command {
        Command::Track(args) => commands::track::run(&args, &ctx),
        Command::Annotate(args) => commands::annotate::run(&args, &ctx),
        Command::Eval(args) => commands::eval::run(&args, &ctx),
        Command::Stats(args) => commands::stats::run(&args, &ctx),
        Command::Ablate(args) => commands::ablate::run(&args, &ctx),
    }
}

fn main() -> ExitCode {
    let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Warn));
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_usage_data_backend_internal() {
        assert_eq!(CliError::usage("bad flag").exit_code(), 2);
        let data: CliError = semtrack::Error::data("x.jsonl", "truncated").into();
        assert_eq!(data.exit_code(), 3);
        let backend: CliError = semtrack::Error::backend("vlm", "timeout").into();
        assert_eq!(backend.exit_code(), 4);
        assert_eq!(CliError::Internal("worker panicked".into()).exit_code(), 5);
    }

    #[test]
    fn stage_wrappers_defer_to_their_cause() {
        use semtrack::error::Stage;
        let wrapped: CliError = semtrack::Error::backend("llm", "503")
            .at_stage(Stage::PredicateExtraction, 3, vec![1, 2])
            .into();
        assert_eq!(wrapped.exit_code(), 4);
        let wrapped: CliError = semtrack::Error::invalid("tracks", "frame count")
            .in_stage(Stage::Evaluation)
            .into();
        assert_eq!(wrapped.exit_code(), 3);
    }

    #[test]
    fn unknown_selector_is_rejected_at_parse_time() {
        let err = parse_selector("argmax").unwrap_err();
        assert!(err.contains("argmax"), "{err}");
        assert!(parse_label_space("frequent").is_ok());
        assert!(parse_grounding("single-box").is_ok());
    }
}
