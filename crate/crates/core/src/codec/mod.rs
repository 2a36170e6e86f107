//! Harmony message codec.
//!
//! Renders conversations into delimiter-marked token text and parses model
//! completions back into [`Message`]s. Integer tokenization is not done here;
//! see [`crate::tokenizer`].

mod message;
mod parse;
mod render;
pub mod tokens;
mod turn;

pub use message::{is_qualified_name, Channel, Conversation, Message, Role};
pub use parse::parse_completion;
pub use render::{
    render_conversation, render_conversation_with, render_message, ASSISTANT_TURN_OPENER,
};
pub use turn::{validate_turn, Action, TurnError, TurnOutcome};

use crate::exception::ExceptionKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    /// Malformed delimiter or header structure in a completion.
    #[error("harmony parse error: {0}")]
    Parse(String),
    #[error("{role:?} message is missing a channel")]
    MissingChannel { role: Role },
    #[error("cannot parse tool name `{0}`")]
    ToolName(String),
    /// A message violates its role's invariants and cannot be emitted.
    #[error("cannot render message: {0}")]
    Render(String),
}

impl CodecError {
    pub fn kind(&self) -> ExceptionKind {
        match self {
            CodecError::Parse(_) | CodecError::Render(_) => ExceptionKind::HarmonyParsingError,
            CodecError::MissingChannel { .. } => ExceptionKind::HarmonyMessageMissingChannel,
            CodecError::ToolName(_) => ExceptionKind::ToolNameParsingError,
        }
    }
}
