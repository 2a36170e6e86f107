use super::message::{is_qualified_name, Conversation, Message, Role};
use super::tokens::{self, CALL, CHANNEL, CONSTRAIN, END, MESSAGE, RECIPIENT_PREFIX, START};
use super::CodecError;
use crate::registry::{render_tool_defs, Placement, ToolSpec};

/// Appended after the last message so the model continues as the assistant.
pub const ASSISTANT_TURN_OPENER: &str = "<|start|>assistant";

fn check_invariants(msg: &Message) -> Result<(), CodecError> {
    match (msg.role, &msg.name) {
        (Role::Tool, None) => {
            return Err(CodecError::Render("tool message has no tool name".into()));
        }
        (Role::Tool, Some(name)) if !is_qualified_name(name) => {
            return Err(CodecError::Render(format!("invalid tool name `{name}`")));
        }
        (Role::Tool, Some(_)) => {}
        (role, Some(name)) => {
            return Err(CodecError::Render(format!("{role:?} message cannot carry name `{name}`")));
        }
        (_, None) => {}
    }
    if let Some(recipient) = &msg.recipient {
        if !is_qualified_name(recipient) {
            return Err(CodecError::Render(format!("invalid recipient `{recipient}`")));
        }
    }
    if let Some(ct) = &msg.content_type {
        if ct.is_empty() || ct.contains(char::is_whitespace) || ct.contains("<|") {
            return Err(CodecError::Render(format!("invalid content type `{ct}`")));
        }
    }
    if let Some(token) = tokens::find_special_token(&msg.content) {
        return Err(CodecError::Render(format!("content contains special token {token}")));
    }
    Ok(())
}

pub(crate) fn render_header(msg: &Message, out: &mut String) {
    match msg.role.keyword() {
        Some(k) => out.push_str(k),
        None => out.push_str(msg.name.as_deref().unwrap_or_default()),
    }
    if let Some(channel) = msg.channel {
        out.push_str(CHANNEL);
        out.push_str(channel.as_str());
    }
    if let Some(recipient) = &msg.recipient {
        out.push(' ');
        out.push_str(RECIPIENT_PREFIX);
        out.push_str(recipient);
    }
    if let Some(ct) = &msg.content_type {
        out.push(' ');
        out.push_str(CONSTRAIN);
        out.push_str(ct);
    }
}

fn render_into(msg: &Message, out: &mut String) -> Result<(), CodecError> {
    check_invariants(msg)?;
    out.push_str(START);
    render_header(msg, out);
    out.push_str(MESSAGE);
    out.push_str(&msg.content);
    out.push_str(if msg.is_tool_call() { CALL } else { END });
    Ok(())
}

/// Renders one message as `<|start|>{header}<|message|>{content}{terminal}`.
///
/// Header fields are emitted in the order role, channel, recipient, content
/// type. Tool calls close with `<|call|>`, everything else with `<|end|>`.
pub fn render_message(msg: &Message) -> Result<String, CodecError> {
    let mut out = String::with_capacity(msg.content.len() + 48);
    render_into(msg, &mut out)?;
    Ok(out)
}

/// Renders a conversation with tool definitions embedded in the system message.
pub fn render_conversation(conv: &Conversation, tools: &[ToolSpec]) -> Result<String, CodecError> {
    render_conversation_with(conv, tools, Placement::System)
}

/// Renders a conversation, embedding the tool-definition block once in the
/// message selected by `placement`. Output ends with [`ASSISTANT_TURN_OPENER`].
pub fn render_conversation_with(
    conv: &Conversation,
    tools: &[ToolSpec],
    placement: Placement,
) -> Result<String, CodecError> {
    let target = match placement {
        Placement::System => Role::System,
        Placement::Developer => Role::Developer,
    };
    let tool_block = if tools.is_empty() {
        None
    } else {
        Some(render_tool_defs(tools).map_err(|e| CodecError::Render(e.to_string()))?)
    };

    let mut out = String::new();
    let mut embedded = false;
    for msg in &conv.messages {
        match &tool_block {
            Some(block) if !embedded && msg.role == target => {
                let mut with_tools = msg.clone();
                if !with_tools.content.is_empty() {
                    with_tools.content.push_str("\n\n");
                }
                with_tools.content.push_str(block);
                render_into(&with_tools, &mut out)?;
                embedded = true;
            }
            _ => render_into(msg, &mut out)?,
        }
    }
    if tool_block.is_some() && !embedded {
        return Err(CodecError::Render(format!(
            "no {target:?} message to carry tool definitions"
        )));
    }
    out.push_str(ASSISTANT_TURN_OPENER);
    Ok(out)
}
