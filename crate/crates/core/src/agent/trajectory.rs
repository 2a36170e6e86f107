//! Line-delimited run records.
//!
//! A trajectory file holds one JSON object per line: a header, then one
//! record per model query (and per restart), then a termination record.
//! The field-by-field reference is `docs/trajectory-format.md`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{AgentConfig, Task};
use crate::client::{ScriptedCompletion, Usage};
use crate::codec::{parse_completion, Message, Role};
use crate::exception::{ExceptionKind, HarnessException, Tier};

pub const FORMAT_NAME: &str = "harmony-agent-trajectory";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub config: AgentConfig,
    pub task: Task,
    /// Qualified names of the tools defined for the run.
    pub tools: Vec<String>,
    /// Token count of the rendered tool-definition block.
    pub tooldef_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionRecord {
    pub kind: ExceptionKind,
    pub tier: Tier,
    pub detail: String,
}

impl From<&HarnessException> for ExceptionRecord {
    fn from(e: &HarnessException) -> Self {
        ExceptionRecord {
            kind: e.kind,
            tier: e.kind.tier(),
            detail: e.detail.clone(),
        }
    }
}

/// What a successfully validated completion asked for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionRecord {
    ToolCall {
        /// Recipient as written by the model.
        recipient: String,
        /// Canonical qualified name after alias collapse, when it resolved.
        tool: Option<String>,
        arguments: String,
    },
    Final { content: String },
}

/// One model query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// Restart index, 0 for the first pass.
    pub restart: u32,
    /// 1-based index of the turn being attempted.
    pub turn: u32,
    /// 1-based attempt number within the turn.
    pub attempt: u32,
    /// Prompt length according to the configured tokenizer.
    pub prompt_tokens: u64,
    /// Prompt length reported by the server, when it reported usage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_prompt_tokens: Option<u64>,
    pub completion: String,
    pub finish_reason: Option<String>,
    pub completion_tokens: u64,
    pub usage_estimated: bool,
    pub action: Option<ActionRecord>,
    pub exception: Option<ExceptionRecord>,
    pub tool_result: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestartRecord {
    /// Index of the pass that begins after this record.
    pub restart: u32,
    pub cause: ExceptionRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Termination {
    pub kind: ExceptionKind,
    pub detail: String,
    /// The final message text when the run was submitted.
    pub final_message: Option<String>,
}

impl Termination {
    pub fn new(kind: ExceptionKind, detail: impl Into<String>) -> Self {
        debug_assert!(kind.is_terminating());
        Termination {
            kind,
            detail: detail.into(),
            final_message: None,
        }
    }

    pub fn submitted(text: String) -> Self {
        Termination {
            kind: ExceptionKind::Submitted,
            detail: "final message received".into(),
            final_message: Some(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Event {
    Turn(TurnRecord),
    Restart(RestartRecord),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(Header),
    Turn(TurnRecord),
    Restart(RestartRecord),
    Termination(Termination),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported trajectory version {found} (this build reads version {FORMAT_VERSION})")]
    Version { line: usize, found: u32 },
    #[error("line {line}: truncated trajectory, no termination record")]
    Truncated { line: usize },
    #[error("trajectory is empty")]
    Empty,
}

impl TrajectoryError {
    pub fn line(&self) -> Option<usize> {
        match self {
            TrajectoryError::Parse { line, .. }
            | TrajectoryError::Version { line, .. }
            | TrajectoryError::Truncated { line } => Some(*line),
            TrajectoryError::Empty => None,
        }
    }
}

/// The complete record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub header: Header,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn turns(&self) -> impl Iterator<Item = &TurnRecord> {
        self.events.iter().filter_map(|e| match e {
            Event::Turn(t) => Some(t),
            Event::Restart(_) => None,
        })
    }

    pub fn restarts(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Restart(_))).count()
    }

    /// Number of model queries.
    pub fn queries(&self) -> usize {
        self.turns().count()
    }

    /// Queries whose completion was accepted.
    pub fn committed_turns(&self) -> usize {
        self.turns().filter(|t| t.action.is_some() && t.exception.is_none()).count()
    }

    pub fn final_message(&self) -> Option<&str> {
        self.termination.final_message.as_deref()
    }

    /// Checks the structural invariants: the termination kind is terminating
    /// and each non-terminating exception is followed by another attempt at
    /// the same turn, or the run ends with `RetrialsExceeded` or a terminating
    /// condition checked before the next query.
    pub fn check(&self) -> Result<(), String> {
        if !self.termination.kind.is_terminating() {
            return Err(format!("termination kind {} is not terminating", self.termination.kind));
        }
        let turns: Vec<&TurnRecord> = self.turns().collect();
        for (i, t) in turns.iter().enumerate() {
            let Some(exc) = &t.exception else { continue };
            if exc.tier == Tier::Terminating {
                if i + 1 != turns.len() {
                    return Err(format!("terminating exception in record {} is not last", i + 1));
                }
                continue;
            }
            match turns.get(i + 1) {
                Some(next) if next.restart == t.restart => {
                    if next.turn != t.turn || next.attempt != t.attempt + 1 {
                        return Err(format!("record {} is not followed by a retry", i + 1));
                    }
                }
                Some(_) => {}
                None => {
                    if self.termination.kind == ExceptionKind::Submitted {
                        return Err("run submitted after a failed attempt".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("trajectory records serialize"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        for e in &self.events {
            push(&match e {
                Event::Turn(t) => Line::Turn(t.clone()),
                Event::Restart(r) => Line::Restart(r.clone()),
            });
        }
        push(&Line::Termination(self.termination.clone()));
        out
    }

    pub fn from_jsonl(doc: &str) -> Result<Self, TrajectoryError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in doc.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            last_line = line;
            let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| TrajectoryError::Parse {
                line,
                message: e.to_string(),
            })?;
            if header.is_none() {
                check_header(&value, line)?;
            }
            let parsed: Line = serde_json::from_value(value).map_err(|e| TrajectoryError::Parse {
                line,
                message: e.to_string(),
            })?;
            match (parsed, &header) {
                (Line::Header(h), None) => header = Some(h),
                (Line::Header(_), Some(_)) => {
                    return Err(TrajectoryError::Parse {
                        line,
                        message: "second header record".into(),
                    })
                }
                (Line::Turn(t), Some(_)) => events.push(Event::Turn(t)),
                (Line::Restart(r), Some(_)) => events.push(Event::Restart(r)),
                (Line::Termination(termination), Some(h)) => {
                    if let Some((extra, _)) = doc.lines().enumerate().skip(idx + 1).find(|(_, l)| !l.trim().is_empty()) {
                        return Err(TrajectoryError::Parse {
                            line: extra + 1,
                            message: "record after termination".into(),
                        });
                    }
                    if !termination.kind.is_terminating() {
                        return Err(TrajectoryError::Parse {
                            line,
                            message: format!("termination kind {} is not terminating", termination.kind),
                        });
                    }
                    return Ok(Trajectory {
                        header: h.clone(),
                        events,
                        termination,
                    });
                }
                (_, None) => unreachable!("header checked above"),
            }
        }
        if header.is_none() {
            return Err(TrajectoryError::Empty);
        }
        Err(TrajectoryError::Truncated { line: last_line })
    }

    /// Completions in query order, replayable through a scripted backend.
    pub fn to_script(&self) -> Vec<ScriptedCompletion> {
        self.turns()
            .map(|t| ScriptedCompletion {
                text: t.completion.clone(),
                finish_reason: t.finish_reason.clone(),
                usage: t.server_prompt_tokens.map(|p| Usage {
                    prompt_tokens: p,
                    completion_tokens: t.completion_tokens,
                    estimated: false,
                }),
            })
            .collect()
    }

    /// Human-readable transcript.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        let h = &self.header;
        let _ = writeln!(out, "task: {}", h.task.user_task);
        let _ = writeln!(
            out,
            "reasoning: {}  tools: {}  tool-definition tokens: {}",
            h.config.reasoning_effort,
            h.tools.join(", "),
            h.tooldef_tokens
        );
        for e in &self.events {
            match e {
                Event::Restart(r) => {
                    let _ = writeln!(out, "\n=== restart {} after {}: {}", r.restart, r.cause.kind, r.cause.detail);
                }
                Event::Turn(t) => write_turn(&mut out, t),
            }
        }
        let _ = writeln!(out, "\n=== {}: {}", self.termination.kind, self.termination.detail);
        if let Some(text) = &self.termination.final_message {
            let _ = writeln!(out, "{text}");
        }
        out
    }
}

fn write_turn(out: &mut String, t: &TurnRecord) {
    let retry = if t.attempt > 1 { format!(" [retry {}]", t.attempt - 1) } else { String::new() };
    let _ = writeln!(
        out,
        "\n--- turn {} attempt {}{retry}  prompt {} tok, completion {} tok{}, finish {}",
        t.turn,
        t.attempt,
        t.prompt_tokens,
        t.completion_tokens,
        if t.usage_estimated { " (est.)" } else { "" },
        t.finish_reason.as_deref().unwrap_or("none"),
    );
    match parse_completion(&t.completion) {
        Ok(msgs) => msgs.iter().for_each(|m| write_message(out, m)),
        Err(_) => {
            let _ = writeln!(out, "[unparsed] {}", t.completion);
        }
    }
    if let Some(result) = &t.tool_result {
        let _ = writeln!(out, "[tool result]\n{result}");
    }
    if let Some(exc) = &t.exception {
        let _ = writeln!(out, "!! {} ({}): {}", exc.kind, exc.tier, exc.detail);
    }
}

fn write_message(out: &mut String, m: &Message) {
    let channel = m.channel.map(|c| c.as_str()).unwrap_or("-");
    let role = match m.role {
        Role::Assistant => String::new(),
        other => format!("{} ", other.keyword().unwrap_or("?")),
    };
    match &m.recipient {
        Some(r) => {
            let _ = writeln!(out, "[{role}{channel} -> {r}] {}", m.content);
        }
        None => {
            let _ = writeln!(out, "[{role}{channel}] {}", m.content);
        }
    }
}

fn check_header(value: &serde_json::Value, line: usize) -> Result<(), TrajectoryError> {
    if value.get("record").and_then(|v| v.as_str()) != Some("header") {
        return Err(TrajectoryError::Parse {
            line,
            message: "first record is not a header".into(),
        });
    }
    if value.get("format").and_then(|v| v.as_str()) != Some(FORMAT_NAME) {
        return Err(TrajectoryError::Parse {
            line,
            message: format!("not a {FORMAT_NAME} file"),
        });
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => Ok(()),
        Some(v) => Err(TrajectoryError::Version {
            line,
            found: v.min(u32::MAX as u64) as u32,
        }),
        None => Err(TrajectoryError::Parse {
            line,
            message: "header lacks a version".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            header: Header {
                format: FORMAT_NAME.into(),
                version: FORMAT_VERSION,
                config: AgentConfig::default(),
                task: Task::new("t"),
                tools: vec!["repo_browser.print_tree".into()],
                tooldef_tokens: 42,
            },
            events: vec![
                Event::Turn(TurnRecord {
                    restart: 0,
                    turn: 1,
                    attempt: 1,
                    prompt_tokens: 10,
                    server_prompt_tokens: None,
                    completion: "garbage".into(),
                    finish_reason: Some("stop".into()),
                    completion_tokens: 2,
                    usage_estimated: true,
                    action: None,
                    exception: Some(ExceptionRecord {
                        kind: ExceptionKind::HarmonyParsingError,
                        tier: Tier::NonTerminating,
                        detail: "x".into(),
                    }),
                    tool_result: None,
                }),
                Event::Turn(TurnRecord {
                    restart: 0,
                    turn: 1,
                    attempt: 2,
                    prompt_tokens: 10,
                    server_prompt_tokens: Some(11),
                    completion: "<|channel|>final<|message|>ok".into(),
                    finish_reason: Some("stop".into()),
                    completion_tokens: 3,
                    usage_estimated: false,
                    action: Some(ActionRecord::Final { content: "ok".into() }),
                    exception: None,
                    tool_result: None,
                }),
            ],
            termination: Termination::submitted("ok".into()),
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let t = sample();
        let doc = t.to_jsonl();
        assert_eq!(doc.lines().count(), 4);
        assert_eq!(Trajectory::from_jsonl(&doc).unwrap(), t);
        assert!(t.check().is_ok());
        assert_eq!(t.committed_turns(), 1);
    }

    #[test]
    fn truncation_reported_at_last_line() {
        let doc = sample().to_jsonl();
        let cut: String = doc.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert_eq!(Trajectory::from_jsonl(&cut).unwrap_err(), TrajectoryError::Truncated { line: 3 });
        let half = &doc[..doc.len() - 20];
        assert!(matches!(Trajectory::from_jsonl(half).unwrap_err(), TrajectoryError::Parse { line: 4, .. }));
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let doc = sample().to_jsonl().replacen("\"version\":1", "\"version\":7", 1);
        assert_eq!(
            Trajectory::from_jsonl(&doc).unwrap_err(),
            TrajectoryError::Version { line: 1, found: 7 }
        );
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Trajectory::from_jsonl("\n").unwrap_err(), TrajectoryError::Empty);
        assert!(Trajectory::from_jsonl("{\"record\":\"turn\"}").is_err());
        let doc = sample().to_jsonl() + "{\"record\":\"restart\"}\n";
        assert_eq!(Trajectory::from_jsonl(&doc).unwrap_err().line(), Some(5));
    }

    #[test]
    fn transcript_annotates_retries() {
        let text = sample().transcript();
        assert!(text.contains("turn 1 attempt 2 [retry 1]"), "{text}");
        assert!(text.contains("!! HarmonyParsingError (NonTerminating): x"));
        assert!(text.contains("[final] ok"));
        assert!(text.trim_end().ends_with("ok"));
    }

    #[test]
    fn script_preserves_server_usage() {
        let script = sample().to_script();
        assert_eq!(script.len(), 2);
        assert_eq!(script[0].usage, None);
        assert_eq!(script[1].usage.unwrap().prompt_tokens, 11);
    }

    #[test]
    fn check_flags_submit_after_failure() {
        let mut t = sample();
        t.events.pop();
        assert!(t.check().is_err());
    }
}
