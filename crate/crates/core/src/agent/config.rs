use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::tokens::find_special_token;
use crate::registry::Placement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningEffort {
    Low,
    #[default]
    Medium,
    High,
}

impl ReasoningEffort {
    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningEffort::Low => "low",
            ReasoningEffort::Medium => "medium",
            ReasoningEffort::High => "high",
        }
    }
}

impl fmt::Display for ReasoningEffort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReasoningEffort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(ReasoningEffort::Low),
            "medium" => Ok(ReasoningEffort::Medium),
            "high" => Ok(ReasoningEffort::High),
            other => Err(format!("unknown reasoning effort `{other}` (expected low, medium, or high)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Consecutive failed attempts tolerated per turn before `RetrialsExceeded`.
    pub max_retries: u32,
    /// Committed turns allowed before `LimitsExceeded`.
    pub step_limit: u32,
    pub context_window: u64,
    /// Per-request generation cap, also reserved when checking for overflow.
    pub max_new_tokens: u32,
    /// Cumulative generated-token budget for the whole run.
    pub max_total_new_tokens: Option<u64>,
    pub temperature: f64,
    pub top_p: f64,
    pub reasoning_effort: ReasoningEffort,
    /// Restart the run from the bootstrap on `MaxContextWindowOverflow`.
    pub high_effort_overflow_retry: bool,
    pub max_overflow_restarts: u32,
    /// Show the model a transient note about its failed attempt on retry.
    /// Off by default: failed attempts are re-sampled from the same prompt.
    pub retry_feedback: bool,
    pub tool_placement: Placement,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_retries: 10,
            step_limit: 250,
            context_window: 131_072,
            max_new_tokens: 32_768,
            max_total_new_tokens: None,
            temperature: 1.0,
            top_p: 1.0,
            reasoning_effort: ReasoningEffort::default(),
            high_effort_overflow_retry: false,
            max_overflow_restarts: 3,
            retry_feedback: false,
            tool_placement: Placement::System,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.context_window == 0 {
            return Err("context_window must be positive".into());
        }
        if self.max_new_tokens == 0 {
            return Err("max_new_tokens must be positive".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(0.0..=1.0).contains(&self.top_p) {
            return Err(format!("top_p {} outside [0, 1]", self.top_p));
        }
        Ok(())
    }
}

/// The three inputs that make up a run's bootstrap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub system_identity: String,
    pub developer_instructions: String,
    pub user_task: String,
}

pub const DEFAULT_IDENTITY: &str = "You are ChatGPT, a large language model trained by OpenAI.";

impl Task {
    pub fn new(user_task: impl Into<String>) -> Self {
        Task {
            system_identity: DEFAULT_IDENTITY.to_string(),
            developer_instructions: String::new(),
            user_task: user_task.into(),
        }
    }

    pub fn with_instructions(mut self, instructions: impl Into<String>) -> Self {
        self.developer_instructions = instructions.into();
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        for (field, text) in [
            ("system identity", &self.system_identity),
            ("developer instructions", &self.developer_instructions),
            ("user task", &self.user_task),
        ] {
            if let Some(tok) = find_special_token(text) {
                return Err(format!("{field} contains the special token {tok}"));
            }
        }
        if self.user_task.trim().is_empty() {
            return Err("user task is empty".into());
        }
        Ok(())
    }

    /// System message body: identity, reasoning effort, and the channel rule.
    pub fn system_message(&self, effort: ReasoningEffort) -> String {
        format!(
            "{}\n\nReasoning: {effort}\n\n# Valid channels: analysis, commentary, final. Channel must be included for every message.",
            self.system_identity
        )
    }
}
