use serde::{Deserialize, Serialize};

use super::message::{Channel, Message, Role};
use crate::exception::ExceptionKind;

/// The single action taken by a valid turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "message")]
pub enum Action {
    ToolCall(Message),
    Final(Message),
}

/// A validated completion: at most one reasoning message and exactly one action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub reasoning: Option<Message>,
    pub action: Action,
    /// Every parsed message in completion order, including commentary
    /// preambles that are neither reasoning nor action.
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TurnError {
    #[error("{0} reasoning messages in one turn")]
    MultipleReasoningMessages(usize),
    #[error("{0} final messages in one turn")]
    MultipleFinalMessages(usize),
    #[error("{0} tool calls in one turn")]
    MultipleToolCalls(usize),
    #[error("no tool call and no final message")]
    NoToolCallNoFinalMessage,
    #[error("both a tool call and a final message")]
    ToolCallAndFinalMessage,
    #[error("completion contains a {0:?} message")]
    UnexpectedRole(Role),
}

impl TurnError {
    pub fn kind(&self) -> ExceptionKind {
        match self {
            TurnError::MultipleReasoningMessages(_) => ExceptionKind::MultipleReasoningMessages,
            TurnError::MultipleFinalMessages(_) => ExceptionKind::MultipleFinalMessages,
            TurnError::MultipleToolCalls(_) => ExceptionKind::MultipleToolCalls,
            TurnError::NoToolCallNoFinalMessage => ExceptionKind::NoToolCallNoFinalMessage,
            TurnError::ToolCallAndFinalMessage => ExceptionKind::ToolCallAndFinalMessage,
            TurnError::UnexpectedRole(_) => ExceptionKind::HarmonyParsingError,
        }
    }
}

/// Classifies the messages of one completion.
///
/// An assistant message with a recipient is a tool call whatever its channel;
/// otherwise `analysis` is reasoning, `final` is a final answer, and plain
/// `commentary` is a preamble that is kept but ignored. Checks run in the
/// order: role, reasoning count, final count, call count, call-and-final,
/// neither.
pub fn validate_turn(msgs: &[Message]) -> Result<TurnOutcome, TurnError> {
    if let Some(m) = msgs.iter().find(|m| m.role != Role::Assistant) {
        return Err(TurnError::UnexpectedRole(m.role));
    }

    let mut reasoning = Vec::new();
    let mut finals = Vec::new();
    let mut calls = Vec::new();
    for m in msgs {
        if m.is_tool_call() {
            calls.push(m);
        } else {
            match m.channel {
                Some(Channel::Analysis) => reasoning.push(m),
                Some(Channel::Final) => finals.push(m),
                _ => {}
            }
        }
    }

    if reasoning.len() > 1 {
        return Err(TurnError::MultipleReasoningMessages(reasoning.len()));
    }
    if finals.len() > 1 {
        return Err(TurnError::MultipleFinalMessages(finals.len()));
    }
    if calls.len() > 1 {
        return Err(TurnError::MultipleToolCalls(calls.len()));
    }
    let action = match (calls.first(), finals.first()) {
        (Some(_), Some(_)) => return Err(TurnError::ToolCallAndFinalMessage),
        (None, None) => return Err(TurnError::NoToolCallNoFinalMessage),
        (Some(call), None) => Action::ToolCall((*call).clone()),
        (None, Some(fin)) => Action::Final((*fin).clone()),
    };
    Ok(TurnOutcome {
        reasoning: reasoning.first().map(|m| (*m).clone()),
        action,
        messages: msgs.to_vec(),
    })
}
