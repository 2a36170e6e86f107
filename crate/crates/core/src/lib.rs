//! A native Harmony-format agent harness.
//!
//! The crate renders conversations directly into the model's special-token
//! message format, parses completions back into channel-tagged messages, runs
//! the render, query, parse, execute loop against an in-distribution tool set,
//! and computes the statistics used to study tool priors and token overhead.

pub mod agent;
pub mod analytics;
pub mod client;
pub mod codec;
pub mod exception;
pub mod patch;
pub mod registry;
pub mod sandbox;
pub mod tokenizer;

pub use agent::{Agent, AgentConfig, ReasoningEffort, Task, Termination, Trajectory};
pub use codec::{Channel, Conversation, Message, Role};
pub use exception::{ExceptionKind, HarnessException, Tier};
pub use registry::{ToolCall, ToolRegistry, ToolSpec};
