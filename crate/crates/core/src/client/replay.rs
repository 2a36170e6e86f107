use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backend, ClientError, CompletionRequest, CompletionResponse};

/// One request/response pair as stored in a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: CompletionRequest,
    pub response: CompletionResponse,
}

/// Forwards to an inner backend and appends every successful exchange to a
/// JSONL file.
pub struct RecordingBackend<B> {
    inner: B,
    sink: BufWriter<File>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn create(inner: B, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingBackend {
            inner,
            sink: BufWriter::new(file),
        })
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let response = self.inner.complete(req)?;
        let line = serde_json::to_string(&Exchange {
            request: req.clone(),
            response: response.clone(),
        })
        .map_err(|e| ClientError::Protocol(e.to_string()))?;
        writeln!(self.sink, "{line}")
            .and_then(|_| self.sink.flush())
            .map_err(|e| ClientError::Protocol(format!("recording write failed: {e}")))?;
        Ok(response)
    }
}

/// Serves a recording back, requiring each prompt to match byte-for-byte.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    exchanges: VecDeque<Exchange>,
    served: usize,
}

impl ReplayBackend {
    pub fn new(exchanges: Vec<Exchange>) -> Result<Self, ClientError> {
        if exchanges.is_empty() {
            return Err(ClientError::InvalidRequest("recording is empty".into()));
        }
        Ok(ReplayBackend {
            exchanges: exchanges.into(),
            served: 0,
        })
    }

    pub fn from_jsonl(doc: &str) -> Result<Self, ClientError> {
        let exchanges = doc
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| ClientError::InvalidRequest(format!("recording line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(exchanges)
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let doc = std::fs::read_to_string(path)
            .map_err(|e| ClientError::InvalidRequest(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&doc)
    }
}

impl Backend for ReplayBackend {
    fn complete(&mut self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let next = self
            .exchanges
            .pop_front()
            .ok_or(ClientError::ScriptExhausted(self.served))?;
        self.served += 1;
        if next.request.prompt != req.prompt {
            return Err(ClientError::Replay(format!(
                "prompt for exchange {} differs from the recording",
                self.served
            )));
        }
        Ok(next.response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{ScriptedBackend, ScriptedCompletion};

    #[test]
    fn record_then_replay_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let text = "<|channel|>final<|message|>done \u{1F600}";
        let inner = ScriptedBackend::new(vec![ScriptedCompletion::stop(text)]).unwrap();
        let req = CompletionRequest::new("<|start|>assistant".into(), 8, 1.0, 1.0);
        let live = RecordingBackend::create(inner, &path).unwrap().complete(&req).unwrap();

        let mut replay = ReplayBackend::load(&path).unwrap();
        assert_eq!(replay.complete(&req).unwrap(), live);
        assert_eq!(replay.complete(&req).unwrap_err(), ClientError::ScriptExhausted(1));
    }

    #[test]
    fn prompt_mismatch_detected() {
        let req = CompletionRequest::new("a".into(), 8, 1.0, 1.0);
        let mut replay = ReplayBackend::new(vec![Exchange {
            request: req.clone(),
            response: CompletionResponse {
                text: "x".into(),
                finish_reason: Some("stop".into()),
                usage: None,
            },
        }])
        .unwrap();
        let other = CompletionRequest::new("b".into(), 8, 1.0, 1.0);
        assert!(matches!(replay.complete(&other), Err(ClientError::Replay(_))));
    }
}
