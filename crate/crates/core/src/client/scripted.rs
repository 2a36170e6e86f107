use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Backend, ClientError, CompletionRequest, CompletionResponse, Usage};

/// One canned completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedCompletion {
    pub text: String,
    #[serde(default = "default_finish")]
    pub finish_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

fn default_finish() -> Option<String> {
    Some("stop".to_string())
}

impl ScriptedCompletion {
    pub fn stop(text: impl Into<String>) -> Self {
        ScriptedCompletion {
            text: text.into(),
            finish_reason: default_finish(),
            usage: None,
        }
    }

    pub fn with_finish(text: impl Into<String>, finish_reason: &str) -> Self {
        ScriptedCompletion {
            text: text.into(),
            finish_reason: Some(finish_reason.to_string()),
            usage: None,
        }
    }
}

/// Deterministic backend that replays completions in order.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: VecDeque<ScriptedCompletion>,
    served: usize,
    prompts: Vec<String>,
}

impl ScriptedBackend {
    pub fn new(script: Vec<ScriptedCompletion>) -> Result<Self, ClientError> {
        if script.is_empty() {
            return Err(ClientError::InvalidRequest("script is empty".into()));
        }
        Ok(ScriptedBackend {
            script: script.into(),
            served: 0,
            prompts: Vec::new(),
        })
    }

    /// Parses one JSON object per line: `{"text": ..., "finish_reason": ...}`.
    /// Blank lines are ignored.
    pub fn from_jsonl(doc: &str) -> Result<Self, ClientError> {
        let script = doc
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| ClientError::InvalidRequest(format!("script line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(script)
    }

    /// Prompts received so far, in order.
    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let next = self
            .script
            .pop_front()
            .ok_or(ClientError::ScriptExhausted(self.served))?;
        self.served += 1;
        self.prompts.push(req.prompt.clone());
        Ok(CompletionResponse {
            text: next.text,
            finish_reason: next.finish_reason,
            usage: next.usage,
        })
    }
}
