use std::sync::Arc;

use super::config::{AgentConfig, Task};
use super::trajectory::{
    ActionRecord, Event, ExceptionRecord, Header, RestartRecord, Termination, Trajectory, TurnRecord, FORMAT_NAME,
    FORMAT_VERSION,
};
use crate::client::{Backend, CompletionRequest};
use crate::codec::tokens::defuse_special_tokens;
use crate::codec::{
    parse_completion, render_conversation_with, render_message, validate_turn, Action, Conversation, Message,
};
use crate::exception::{ExceptionKind, HarnessException};
use crate::registry::{render_tool_defs, ToolRegistry};
use crate::sandbox::{execute_tool, SandboxConfig};
use crate::tokenizer::{HeuristicTokenizer, Tokenizer};

/// Problems detected before any model call.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error("invalid task: {0}")]
    Task(String),
    #[error(transparent)]
    Sandbox(#[from] crate::sandbox::SandboxError),
}

/// Maps a backend finish reason onto the taxonomy.
pub fn handle_finish_reason(reason: Option<&str>) -> Result<(), ExceptionKind> {
    match reason {
        Some("stop") => Ok(()),
        Some("length") => Err(ExceptionKind::LongGeneration),
        _ => Err(ExceptionKind::UnexpectedFinishReason),
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct LoopState {
    bootstrap: Conversation,
    conversation: Conversation,
    restart: u32,
    committed: u32,
    retries: u32,
    total_new_tokens: u64,
    events: Vec<Event>,
    feedback: Option<String>,
    termination: Option<Termination>,
}

impl LoopState {
    pub fn conversation(&self) -> &Conversation {
        &self.conversation
    }

    pub fn committed_turns(&self) -> u32 {
        self.committed
    }

    /// Consecutive failed attempts at the current turn.
    pub fn retries(&self) -> u32 {
        self.retries
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn termination(&self) -> Option<&Termination> {
        self.termination.as_ref()
    }

    pub fn total_new_tokens(&self) -> u64 {
        self.total_new_tokens
    }

    fn restart_from_bootstrap(&mut self, cause: &Termination) {
        self.restart += 1;
        self.events.push(Event::Restart(RestartRecord {
            restart: self.restart,
            cause: ExceptionRecord {
                kind: cause.kind,
                tier: cause.kind.tier(),
                detail: cause.detail.clone(),
            },
        }));
        self.conversation = self.bootstrap.clone();
        self.committed = 0;
        self.retries = 0;
        self.feedback = None;
        self.termination = None;
    }
}

/// Result of a step that did not end the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// A tool call was executed and its result appended.
    Committed { tool: String, result: String },
    /// The attempt failed with a recoverable exception and will be re-sampled.
    Retry(HarnessException),
}

enum Accepted {
    Final { messages: Vec<Message>, text: String },
    Tool { messages: Vec<Message>, result: Message },
}

/// Drives runs against a fixed configuration, tool inventory, and sandbox.
/// Shareable across threads; each run keeps its own [`LoopState`].
#[derive(Clone)]
pub struct Agent {
    cfg: AgentConfig,
    registry: ToolRegistry,
    sandbox: SandboxConfig,
    tokenizer: Arc<dyn Tokenizer>,
    tooldef_tokens: u64,
}

impl Agent {
    pub fn new(cfg: AgentConfig, registry: ToolRegistry, sandbox: SandboxConfig) -> Result<Self, AgentError> {
        Self::with_tokenizer(cfg, registry, sandbox, Arc::new(HeuristicTokenizer))
    }

    pub fn with_tokenizer(
        cfg: AgentConfig,
        registry: ToolRegistry,
        sandbox: SandboxConfig,
        tokenizer: Arc<dyn Tokenizer>,
    ) -> Result<Self, AgentError> {
        cfg.validate().map_err(AgentError::Config)?;
        sandbox.validate()?;
        let tooldef_tokens = if registry.is_empty() {
            0
        } else {
            let block = render_tool_defs(registry.specs()).map_err(|e| AgentError::Config(e.to_string()))?;
            tokenizer.count(&block) as u64
        };
        Ok(Agent {
            cfg,
            registry,
            sandbox,
            tokenizer,
            tooldef_tokens,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    /// Tokens in the tool-definition block.
    pub fn tooldef_tokens(&self) -> u64 {
        self.tooldef_tokens
    }

    pub fn header(&self, task: &Task) -> Header {
        Header {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            config: self.cfg.clone(),
            task: task.clone(),
            tools: self.registry.specs().iter().map(|s| s.qualified_name()).collect(),
            tooldef_tokens: self.tooldef_tokens,
        }
    }

    /// Builds the three-message bootstrap and checks that it renders.
    pub fn start(&self, task: &Task) -> Result<LoopState, AgentError> {
        task.validate().map_err(AgentError::Task)?;
        let bootstrap = Conversation::bootstrap(
            task.system_message(self.cfg.reasoning_effort),
            task.developer_instructions.clone(),
            task.user_task.clone(),
        );
        self.render(&bootstrap).map_err(AgentError::Task)?;
        Ok(LoopState {
            conversation: bootstrap.clone(),
            bootstrap,
            restart: 0,
            committed: 0,
            retries: 0,
            total_new_tokens: 0,
            events: Vec::new(),
            feedback: None,
            termination: None,
        })
    }

    fn render(&self, conv: &Conversation) -> Result<String, String> {
        render_conversation_with(conv, self.registry.specs(), self.cfg.tool_placement).map_err(|e| e.to_string())
    }

    fn terminate(state: &mut LoopState, t: Termination) -> Termination {
        state.termination = Some(t.clone());
        t
    }

    /// One iteration. Returns the terminating condition as `Err`.
    pub fn step(&self, state: &mut LoopState, backend: &mut dyn Backend) -> Result<StepOutcome, Termination> {
        if let Some(t) = &state.termination {
            return Err(t.clone());
        }
        if state.committed >= self.cfg.step_limit {
            let t = Termination::new(
                ExceptionKind::LimitsExceeded,
                format!("step limit of {} turns reached", self.cfg.step_limit),
            );
            return Err(Self::terminate(state, t));
        }

        let prompt = match &state.feedback {
            None => self.render(&state.conversation),
            Some(note) => {
                let mut conv = state.conversation.clone();
                conv.push(Message::user(note.clone()));
                self.render(&conv)
            }
        };
        let prompt = match prompt {
            Ok(p) => p,
            Err(e) => {
                let t = Termination::new(ExceptionKind::UnexpectedFinishReason, format!("prompt render failed: {e}"));
                return Err(Self::terminate(state, t));
            }
        };
        let prompt_tokens = self.tokenizer.count(&prompt) as u64;
        if prompt_tokens + self.cfg.max_new_tokens as u64 > self.cfg.context_window {
            let t = Termination::new(
                ExceptionKind::MaxContextWindowOverflow,
                format!(
                    "prompt of {prompt_tokens} tokens plus {} new tokens exceeds the {}-token window",
                    self.cfg.max_new_tokens, self.cfg.context_window
                ),
            );
            return Err(Self::terminate(state, t));
        }

        let req = CompletionRequest::new(prompt, self.cfg.max_new_tokens, self.cfg.temperature, self.cfg.top_p);
        let resp = match backend.complete(&req) {
            Ok(r) => r,
            Err(e) => {
                let t = Termination::new(ExceptionKind::UnexpectedFinishReason, format!("backend failure: {e}"));
                return Err(Self::terminate(state, t));
            }
        };
        let usage = resp.usage_or_estimate(&req.prompt, self.tokenizer.as_ref());
        state.total_new_tokens += usage.completion_tokens;

        let mut record = TurnRecord {
            restart: state.restart,
            turn: state.committed + 1,
            attempt: state.retries + 1,
            prompt_tokens,
            server_prompt_tokens: (!usage.estimated).then_some(usage.prompt_tokens),
            completion: resp.text.clone(),
            finish_reason: resp.finish_reason.clone(),
            completion_tokens: usage.completion_tokens,
            usage_estimated: usage.estimated,
            action: None,
            exception: None,
            tool_result: None,
        };

        if let Some(budget) = self.cfg.max_total_new_tokens {
            if state.total_new_tokens > budget {
                let exc = HarnessException::new(
                    ExceptionKind::MaxNewTokensExceeded,
                    format!("{} generated tokens exceed the budget of {budget}", state.total_new_tokens),
                );
                record.exception = Some((&exc).into());
                state.events.push(Event::Turn(record));
                return Err(Self::terminate(state, Termination::new(exc.kind, exc.detail)));
            }
        }

        let (action, verdict) = self.evaluate(&resp.text, resp.finish_reason.as_deref());
        record.action = action;
        match verdict {
            Ok(Accepted::Final { messages, text }) => {
                state.events.push(Event::Turn(record));
                state.conversation.messages.extend(messages);
                state.committed += 1;
                state.retries = 0;
                state.feedback = None;
                Err(Self::terminate(state, Termination::submitted(text)))
            }
            Ok(Accepted::Tool { messages, result }) => {
                record.tool_result = Some(result.content.clone());
                state.events.push(Event::Turn(record));
                state.conversation.messages.extend(messages);
                let outcome = StepOutcome::Committed {
                    tool: result.name.clone().unwrap_or_default(),
                    result: result.content.clone(),
                };
                state.conversation.push(result);
                state.committed += 1;
                state.retries = 0;
                state.feedback = None;
                Ok(outcome)
            }
            Err(exc) if exc.kind.is_terminating() => {
                record.exception = Some((&exc).into());
                state.events.push(Event::Turn(record));
                Err(Self::terminate(state, Termination::new(exc.kind, exc.detail)))
            }
            Err(exc) => {
                record.exception = Some((&exc).into());
                state.events.push(Event::Turn(record));
                state.retries += 1;
                if state.retries > self.cfg.max_retries {
                    let t = Termination::new(
                        ExceptionKind::RetrialsExceeded,
                        format!(
                            "{} consecutive failed attempts, last: {}: {}",
                            state.retries, exc.kind, exc.detail
                        ),
                    );
                    return Err(Self::terminate(state, t));
                }
                if self.cfg.retry_feedback {
                    state.feedback = Some(defuse_special_tokens(&format!(
                        "Your previous response could not be processed ({}: {}). Please respond again.",
                        exc.kind, exc.detail
                    )));
                }
                Ok(StepOutcome::Retry(exc))
            }
        }
    }

    /// Classifies one completion; on a tool call, also executes it.
    fn evaluate(&self, text: &str, finish: Option<&str>) -> (Option<ActionRecord>, Result<Accepted, HarnessException>) {
        if let Err(kind) = handle_finish_reason(finish) {
            let detail = match kind {
                ExceptionKind::LongGeneration => {
                    format!("generation exceeded max_tokens ({})", self.cfg.max_new_tokens)
                }
                _ => format!("finish reason {}", finish.map(|f| format!("`{f}`")).unwrap_or("missing".into())),
            };
            return (None, Err(HarnessException::new(kind, detail)));
        }
        let messages = match parse_completion(text) {
            Ok(m) => m,
            Err(e) => return (None, Err(HarnessException::new(e.kind(), e.to_string()))),
        };
        let outcome = match validate_turn(&messages) {
            Ok(o) => o,
            Err(e) => return (None, Err(HarnessException::new(e.kind(), e.to_string()))),
        };
        for m in &outcome.messages {
            if let Err(e) = render_message(m) {
                return (None, Err(HarnessException::new(ExceptionKind::HarmonyParsingError, e.to_string())));
            }
        }

        match outcome.action {
            Action::Final(msg) => {
                let action = ActionRecord::Final {
                    content: msg.content.clone(),
                };
                (
                    Some(action),
                    Ok(Accepted::Final {
                        messages: outcome.messages,
                        text: msg.content,
                    }),
                )
            }
            Action::ToolCall(msg) => {
                let recipient = msg.recipient.clone().unwrap_or_default();
                let mut action = ActionRecord::ToolCall {
                    recipient: recipient.clone(),
                    tool: None,
                    arguments: msg.content.clone(),
                };
                let resolution = match self.registry.resolve_tool(&recipient) {
                    Ok(r) => r,
                    Err(e) => {
                        let kind = e.kind().unwrap_or(ExceptionKind::UnknownToolCalled);
                        return (Some(action), Err(HarnessException::new(kind, e.to_string())));
                    }
                };
                if let ActionRecord::ToolCall { tool, .. } = &mut action {
                    *tool = Some(resolution.spec.qualified_name());
                }
                let call = match self.registry.validate_args(resolution.spec, &msg.content) {
                    Ok(c) => c,
                    Err(e) => return (Some(action), Err(HarnessException::new(e.kind(), e.to_string()))),
                };
                let output = match execute_tool(&call, &self.sandbox) {
                    Ok(o) => o,
                    Err(e) => {
                        let kind = e.kind().unwrap_or(ExceptionKind::ExecutionTimeoutError);
                        return (Some(action), Err(HarnessException::new(kind, e.to_string())));
                    }
                };
                let channel = msg.channel.unwrap_or(crate::codec::Channel::Commentary);
                let result = Message::tool_result(recipient, channel, output);
                (
                    Some(action),
                    Ok(Accepted::Tool {
                        messages: outcome.messages,
                        result,
                    }),
                )
            }
        }
    }

    /// Runs a task to termination.
    pub fn run(&self, task: &Task, backend: &mut dyn Backend) -> Result<Trajectory, AgentError> {
        let mut state = self.start(task)?;
        let termination = loop {
            match self.step(&mut state, backend) {
                Ok(_) => {}
                Err(t)
                    if t.kind == ExceptionKind::MaxContextWindowOverflow
                        && self.cfg.high_effort_overflow_retry
                        && state.restart < self.cfg.max_overflow_restarts =>
                {
                    tracing::info!(restart = state.restart + 1, "context overflow, restarting run");
                    state.restart_from_bootstrap(&t);
                }
                Err(t) => break t,
            }
        };
        Ok(Trajectory {
            header: self.header(task),
            events: state.events,
            termination,
        })
    }
}
