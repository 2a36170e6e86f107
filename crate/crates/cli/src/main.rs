mod args;
mod config;
mod run;
mod stats;

use std::fmt;
use std::io::Read as _;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use harmony_agent::agent::TrajectoryError;
use harmony_agent::patch::{apply_patch, parse_patch};
use harmony_agent::{ExceptionKind, Trajectory};

use args::{ApplyPatchArgs, Cli, Command, ReplayArgs, ReplayFormat};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Process exit status for a run's termination kind.
pub fn exit_code(kind: ExceptionKind) -> i32 {
    match kind {
        ExceptionKind::Submitted => 0,
        ExceptionKind::LimitsExceeded => 10,
        ExceptionKind::MaxContextWindowOverflow => 11,
        ExceptionKind::UnexpectedFinishReason => 12,
        ExceptionKind::MaxNewTokensExceeded => 13,
        ExceptionKind::RetrialsExceeded => 14,
        // Recoverable kinds never end a run.
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or inputs detected before any work: exit 2.
    Usage(String),
    /// I/O errors, corrupt input files, rejected patches: exit 1.
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

/// `path:line: message` for errors that carry a line number.
pub fn located(path: &Path, e: &TrajectoryError) -> String {
    match e.line() {
        Some(line) => {
            let msg = e.to_string();
            let msg = msg.split_once(": ").map_or(msg.as_str(), |(_, rest)| rest).to_string();
            format!("{}:{line}: {msg}", path.display())
        }
        None => format!("{}: {e}", path.display()),
    }
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let doc = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Trajectory::from_jsonl(&doc).map_err(|e| Failure::Runtime(located(path, &e)))
}

fn cmd_replay(args: &ReplayArgs) -> Result<i32, Failure> {
    let traj = load_trajectory(&args.trajectory)?;
    match args.format {
        ReplayFormat::Text => print!("{}", traj.transcript()),
        ReplayFormat::Json => println!("{}", serde_json::to_string_pretty(&traj).expect("trajectory serializes")),
        ReplayFormat::Script => {
            for item in traj.to_script() {
                println!("{}", serde_json::to_string(&item).expect("script serializes"));
            }
        }
    }
    Ok(0)
}

fn cmd_apply_patch(args: &ApplyPatchArgs) -> Result<i32, Failure> {
    if !args.workspace.is_dir() {
        return Err(Failure::Usage(format!("workspace {} is not a directory", args.workspace.display())));
    }
    let text = match args.patch.as_deref() {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Runtime(format!("stdin: {e}")))?;
            s
        }
    };
    let report = parse_patch(&text)
        .and_then(|p| apply_patch(&p, &args.workspace))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{}", report.summary());
    Ok(0)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Stats(s) => stats::cmd_stats(s),
        Command::ApplyPatch(a) => cmd_apply_patch(a),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            match f {
                Failure::Usage(_) => EXIT_USAGE,
                Failure::Runtime(_) => EXIT_RUNTIME,
            }
        }
    };
    ExitCode::from(code as u8)
}
