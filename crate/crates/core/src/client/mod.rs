//! Transport to a raw text-completion endpoint.
//!
//! The prompt is sent exactly as rendered; no chat templating happens on
//! either side. [`ScriptedBackend`] and [`ReplayBackend`] make runs
//! reproducible without a server.

mod http;
mod replay;
mod scripted;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpConfig, RetryPolicy};
pub use replay::{RecordingBackend, ReplayBackend, Exchange};
pub use scripted::{ScriptedBackend, ScriptedCompletion};

use crate::codec::tokens::ASSISTANT_STOP_STRINGS;
use crate::tokenizer::Tokenizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub stop: Vec<String>,
}

impl CompletionRequest {
    /// A request with the assistant turn terminals registered as stop strings.
    pub fn new(prompt: String, max_tokens: u32, temperature: f64, top_p: f64) -> Self {
        CompletionRequest {
            prompt,
            max_tokens,
            temperature,
            top_p,
            stop: ASSISTANT_STOP_STRINGS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ClientError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.top_p) {
            return Err(ClientError::InvalidRequest(format!("top_p {} outside [0, 1]", self.top_p)));
        }
        if let Some(missing) = ASSISTANT_STOP_STRINGS.iter().find(|s| !self.stop.iter().any(|t| t == *s)) {
            return Err(ClientError::InvalidRequest(format!("stop set lacks {missing}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Counted locally because the server did not report usage.
    #[serde(default)]
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub finish_reason: Option<String>,
    pub usage: Option<Usage>,
}

impl CompletionResponse {
    /// Server-reported usage, or a local estimate marked as such.
    pub fn usage_or_estimate(&self, prompt: &str, tokenizer: &dyn Tokenizer) -> Usage {
        self.usage.unwrap_or_else(|| Usage {
            prompt_tokens: tokenizer.count(prompt) as u64,
            completion_tokens: tokenizer.count(&self.text) as u64,
            estimated: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    /// Rejected by the server with a 4xx status; not retried.
    #[error("server rejected request ({status}): {body}")]
    Config { status: u16, body: String },
    /// Connection or server failure that persisted through every retry.
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed server response: {0}")]
    Protocol(String),
    #[error("scripted backend exhausted after {0} completions")]
    ScriptExhausted(usize),
    #[error("replay mismatch: {0}")]
    Replay(String),
}

/// Anything that can answer a completion request.
pub trait Backend {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        (**self).complete(req)
    }
}

impl<B: Backend + ?Sized> Backend for &mut B {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        (**self).complete(req)
    }
}
