use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harmony_agent::ReasoningEffort;

#[derive(Debug, Parser)]
#[command(name = "harmony-agent", version, about = "Run, replay and analyse Harmony-format agent trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an agent on a task against a live endpoint or a scripted backend.
    Run(Box<RunArgs>),
    /// Print a trajectory file as a readable transcript.
    Replay(ReplayArgs),
    /// Compute reports over trajectories and logged samples.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Apply a patch envelope to a workspace.
    ApplyPatch(ApplyPatchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Task text given to the model as the user message.
    #[arg(long, conflicts_with = "task_file", required_unless_present = "task_file")]
    pub task: Option<String>,
    /// File whose contents are the task text.
    #[arg(long)]
    pub task_file: Option<PathBuf>,
    /// Developer-message instructions placed before the tool block.
    #[arg(long)]
    pub instructions: Option<String>,

    /// TOML config file; values there sit below environment and flags.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// OpenAI-compatible base URL, e.g. http://localhost:8000/v1
    #[arg(long, conflicts_with = "script")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Completions, a recorded exchange log, or a trajectory to serve instead of a live model.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Append every request and response to this JSONL file.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Sent as the `seed` request parameter; run k of a parallel batch uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_parser = parse_effort)]
    pub reasoning: Option<ReasoningEffort>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub step_limit: Option<u32>,
    #[arg(long)]
    pub context_window: Option<u64>,
    #[arg(long)]
    pub max_new_tokens: Option<u32>,
    /// Completion-token budget for the whole run.
    #[arg(long)]
    pub max_total_new_tokens: Option<u64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    /// Restart from the bootstrap on context overflow instead of stopping.
    #[arg(long)]
    pub overflow_restart: bool,
    /// Tell the model why its previous attempt was rejected.
    #[arg(long)]
    pub retry_feedback: bool,

    /// Tool inventory TOML; defaults to the built-in inventory.
    #[arg(long)]
    pub tools: Option<PathBuf>,
    /// Drop unknown tool-call arguments instead of rejecting the call.
    #[arg(long)]
    pub permissive: bool,

    /// Directory the tools operate on.
    #[arg(long, short = 'w')]
    pub workspace: Option<PathBuf>,
    /// Per-command timeout for `container.exec`, in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Maximum bytes of tool output returned to the model.
    #[arg(long)]
    pub output_cap: Option<usize>,

    /// Trajectory output path (stdout when absent). With --parallel, a directory.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Number of independent runs, each on its own copy of the workspace.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

fn parse_effort(s: &str) -> Result<ReasoningEffort, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub trajectory: PathBuf,
    #[arg(long, value_enum, default_value_t = ReplayFormat::Text)]
    pub format: ReplayFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReplayFormat {
    Text,
    Json,
    /// Completions only, usable as a `run --script` input.
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = harmony_agent::analytics::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, default_value_t = harmony_agent::analytics::DEFAULT_LEVEL)]
    pub level: f64,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Prompt tokens with tool definitions sent once versus every turn.
    Overhead {
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
        /// Also write a paired histogram of per-query prompt sizes as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Cross-reference tools named in text samples with tools actually called.
    Crossref {
        /// Text samples: one JSON string or {"text": ...} object per line.
        #[arg(long)]
        text: PathBuf,
        /// Trajectories whose tool calls are counted.
        calls: Vec<PathBuf>,
        #[arg(long, default_value = "repo_browser")]
        namespace: String,
        /// Tool inventory TOML used to flag alias names.
        #[arg(long)]
        tools: Option<PathBuf>,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Call-rate lift between two sets of 0/1 outcomes.
    Lift {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        with_tools: PathBuf,
        #[arg(long, default_value = "call rate")]
        label: String,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Bootstrap interval for one set of 0/1 outcomes.
    Ci {
        outcomes: PathBuf,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Debug, Args)]
pub struct ApplyPatchArgs {
    /// Patch file; reads stdin when absent or `-`.
    pub patch: Option<PathBuf>,
    #[arg(long, short = 'w', default_value = ".")]
    pub workspace: PathBuf,
}
