use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{Backend, ClientError, CompletionRequest, CompletionResponse, Usage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, doubling from `base_delay`.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Base URL including the API prefix, e.g. `http://localhost:8000/v1`.
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub request_timeout: Duration,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Merged into every request body. Defaults keep special tokens in the
    /// returned text, which the parser needs.
    #[serde(default = "default_extra_body")]
    pub extra_body: Map<String, Value>,
}

fn default_extra_body() -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("skip_special_tokens".into(), Value::Bool(false));
    m.insert("spaces_between_special_tokens".into(), Value::Bool(false));
    m
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            request_timeout: Duration::from_secs(600),
            retry: RetryPolicy::default(),
            extra_body: default_extra_body(),
        }
    }

    fn url(&self) -> String {
        format!("{}/completions", self.endpoint.trim_end_matches('/'))
    }
}

/// Client for an OpenAI-compatible `/completions` endpoint.
///
/// Cloning is cheap and clones share the connection pool.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    cfg: HttpConfig,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

enum Attempt {
    Done(CompletionResponse),
    Retry(String),
    Fatal(ClientError),
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Result<Self, ClientError> {
        if cfg.endpoint.is_empty() {
            return Err(ClientError::InvalidRequest("endpoint is empty".into()));
        }
        if cfg.retry.max_attempts == 0 {
            return Err(ClientError::InvalidRequest("retry.max_attempts must be at least 1".into()));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.request_timeout)
            .build()
            .map_err(|e| ClientError::InvalidRequest(e.to_string()))?;
        Ok(HttpBackend { cfg, http })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    /// The JSON body sent for `req`.
    pub fn request_body(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.cfg.model,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "top_p": req.top_p,
            "stop": req.stop,
            "stream": false,
        });
        let obj = body.as_object_mut().expect("literal object");
        for (k, v) in &self.cfg.extra_body {
            obj.insert(k.clone(), v.clone());
        }
        body
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut rb = self.http.post(self.cfg.url()).json(body);
        if let Some(key) = &self.cfg.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = match rb.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}: {text}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(ClientError::Config {
                status: status.as_u16(),
                body: text,
            });
        }
        let wire: WireResponse = match serde_json::from_str(&text) {
            Ok(w) => w,
            Err(e) => return Attempt::Fatal(ClientError::Protocol(e.to_string())),
        };
        let Some(choice) = wire.choices.into_iter().next() else {
            return Attempt::Fatal(ClientError::Protocol("response has no choices".into()));
        };
        Attempt::Done(CompletionResponse {
            text: choice.text,
            finish_reason: choice.finish_reason,
            usage: wire.usage.map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
                estimated: false,
            }),
        })
    }
}

impl Backend for HttpBackend {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        req.validate()?;
        let body = self.request_body(req);
        let mut last = String::new();
        for attempt in 1..=self.cfg.retry.max_attempts {
            match self.attempt(&body) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => {
                    tracing::warn!(attempt, error = %msg, "completion request failed");
                    last = msg;
                    if attempt < self.cfg.retry.max_attempts {
                        thread::sleep(self.cfg.retry.delay(attempt));
                    }
                }
            }
        }
        Err(ClientError::Transport {
            attempts: self.cfg.retry.max_attempts,
            message: last,
        })
    }
}
