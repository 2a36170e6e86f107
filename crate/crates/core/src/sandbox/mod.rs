//! Tool execution inside a confined workspace.
//!
//! `container.exec` shells out; the `repo_browser` tools are implemented
//! natively so their output is deterministic.

mod browser;
mod exec;
mod paths;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use browser::{open_file, print_tree, render_hits, search, SearchHit, SKIPPED_DIRS};
pub use exec::{exec, ExecResult};
pub use paths::{canonical_root, display_relative, resolve_in, PathError};

use crate::codec::tokens::defuse_special_tokens;
use crate::exception::ExceptionKind;
use crate::patch::{apply_patch, parse_patch};
use crate::registry::ToolCall;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_OUTPUT_CAP: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum Isolation {
    /// A child process whose working directory is the workspace root.
    #[default]
    SubprocessCwd,
    /// `{runtime} exec -w {workdir} {container} /bin/sh -c {cmd}` against an
    /// already-running container with the workspace bind-mounted at `workdir`.
    Container {
        runtime: String,
        container: String,
        workdir: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxConfig {
    pub workspace_root: PathBuf,
    pub timeout: Duration,
    pub output_cap: usize,
    #[serde(default)]
    pub isolation: Isolation,
    /// Treat `search` queries as regular expressions.
    #[serde(default)]
    pub search_regex: bool,
}

impl SandboxConfig {
    pub fn new(workspace_root: PathBuf) -> Self {
        SandboxConfig {
            workspace_root,
            timeout: DEFAULT_TIMEOUT,
            output_cap: DEFAULT_OUTPUT_CAP,
            isolation: Isolation::SubprocessCwd,
            search_regex: false,
        }
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.timeout.is_zero() {
            return Err(SandboxError::Config("timeout must be positive".into()));
        }
        if self.output_cap == 0 {
            return Err(SandboxError::Config("output cap must be positive".into()));
        }
        if !self.workspace_root.is_dir() {
            return Err(SandboxError::Config(format!(
                "workspace {} is not a directory",
                self.workspace_root.display()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SandboxError {
    #[error("invalid sandbox configuration: {0}")]
    Config(String),
    #[error("failed to start command: {0}")]
    Spawn(String),
    #[error("the action execution timed out after {timeout:?}")]
    Timeout {
        timeout: Duration,
        partial_output: String,
    },
}

impl SandboxError {
    pub fn kind(&self) -> Option<ExceptionKind> {
        match self {
            SandboxError::Timeout { .. } => Some(ExceptionKind::ExecutionTimeoutError),
            _ => None,
        }
    }
}

/// Tool failures the model can recover from. They are returned to the model
/// as the tool result text rather than raised as exceptions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("path not found: {0}")]
    NotFound(String),
    #[error("not a file: {0}")]
    NotAFile(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("{0}")]
    Patch(String),
    #[error("tool `{0}` has no implementation in this sandbox")]
    Unimplemented(String),
    #[error("{0}")]
    Io(String),
}

impl ToolError {
    /// Stable text shown to the model.
    pub fn render(&self) -> String {
        format!("Error: {self}")
    }
}

/// Truncates `text` to at most `cap` bytes on a character boundary, appending
/// a marker when anything was cut.
pub fn cap_output(text: String, cap: usize) -> String {
    if text.len() <= cap {
        return text;
    }
    let mut end = cap;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}\n[output truncated at {end} bytes]", &text[..end])
}

/// Runs a validated tool call and returns the text for the tool-result
/// message. Only a timeout escapes as an error.
pub fn execute_tool(call: &ToolCall, cfg: &SandboxConfig) -> Result<String, SandboxError> {
    let qualified = call.spec.qualified_name();
    let result: Result<String, ToolError> = match qualified.as_str() {
        "repo_browser.print_tree" => print_tree(call.str_arg("path").unwrap_or("."), call.int_arg("depth"), cfg),
        "repo_browser.search" => search(
            call.str_arg("path").unwrap_or("."),
            call.str_arg("query").unwrap_or_default(),
            call.int_arg("max_results"),
            cfg,
        )
        .map(|hits| render_hits(&hits)),
        "repo_browser.open_file" => open_file(
            call.str_arg("path").unwrap_or_default(),
            call.int_arg("line_start"),
            call.int_arg("line_end"),
            cfg,
        ),
        "repo_browser.apply_patch" => parse_patch(call.str_arg("patch").unwrap_or_default())
            .and_then(|p| apply_patch(&p, &cfg.workspace_root))
            .map(|r| r.summary())
            .map_err(|e| ToolError::Patch(e.to_string())),
        "container.exec" => match exec(call.str_arg("cmd").unwrap_or_default(), cfg) {
            Ok(r) => Ok(r.render()),
            Err(e @ SandboxError::Timeout { .. }) => return Err(e),
            Err(e) => Err(ToolError::Io(e.to_string())),
        },
        other => Err(ToolError::Unimplemented(other.to_string())),
    };
    let text = result.unwrap_or_else(|e| e.render());
    Ok(defuse_special_tokens(&cap_output(text, cfg.output_cap)))
}
