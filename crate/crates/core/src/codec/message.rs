use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Author role of a Harmony message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Developer,
    User,
    Assistant,
    /// A tool result. The header carries the tool's qualified name in place of
    /// a role keyword, see [`Message::name`].
    Tool,
}

impl Role {
    /// Header keyword for non-tool roles.
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            Role::System => Some("system"),
            Role::Developer => Some("developer"),
            Role::User => Some("user"),
            Role::Assistant => Some("assistant"),
            Role::Tool => None,
        }
    }

    pub(crate) fn from_keyword(s: &str) -> Option<Role> {
        match s {
            "system" => Some(Role::System),
            "developer" => Some(Role::Developer),
            "user" => Some(Role::User),
            "assistant" => Some(Role::Assistant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Chain-of-thought reasoning.
    Analysis,
    /// Tool calls and their results.
    Commentary,
    /// The user-facing answer; ends the task.
    Final,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Analysis, Channel::Commentary, Channel::Final];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Analysis => "analysis",
            Channel::Commentary => "commentary",
            Channel::Final => "final",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analysis" => Ok(Channel::Analysis),
            "commentary" => Ok(Channel::Commentary),
            "final" => Ok(Channel::Final),
            _ => Err(()),
        }
    }
}

/// One Harmony message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    /// Qualified tool name for [`Role::Tool`] messages; `None` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<Channel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            name: None,
            channel: None,
            recipient: None,
            content_type: None,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn developer(content: impl Into<String>) -> Self {
        Self::new(Role::Developer, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(channel: Channel, content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content).with_channel(channel)
    }

    /// An assistant tool call on the commentary channel with JSON arguments.
    pub fn tool_call(recipient: impl Into<String>, args: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            name: None,
            channel: Some(Channel::Commentary),
            recipient: Some(recipient.into()),
            content_type: Some("json".to_string()),
            content: args.into(),
        }
    }

    /// A tool result answering a call to `tool` (qualified name). The result is
    /// addressed back to the assistant on the calling message's channel.
    pub fn tool_result(tool: impl Into<String>, channel: Channel, output: impl Into<String>) -> Self {
        Message {
            role: Role::Tool,
            name: Some(tool.into()),
            channel: Some(channel),
            recipient: Some("assistant".to_string()),
            content_type: None,
            content: output.into(),
        }
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn with_recipient(mut self, recipient: impl Into<String>) -> Self {
        self.recipient = Some(recipient.into());
        self
    }

    pub fn with_content_type(mut self, content_type: impl Into<String>) -> Self {
        self.content_type = Some(content_type.into());
        self
    }

    /// True for an assistant message addressed to a tool.
    pub fn is_tool_call(&self) -> bool {
        self.role == Role::Assistant && self.recipient.as_deref().is_some_and(|r| !r.is_empty())
    }
}

/// Checks that `name` is a dotted sequence of identifiers, e.g.
/// `repo_browser.print_tree` or `container.exec`.
pub fn is_qualified_name(name: &str) -> bool {
    !name.is_empty()
        && name.split('.').all(|seg| {
            let mut chars = seg.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        })
}

/// A conversation: the three-message bootstrap followed by completed turns.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conversation {
    pub messages: Vec<Message>,
}

impl Conversation {
    /// System, developer, and user messages, in that order.
    pub fn bootstrap(system: impl Into<String>, developer: impl Into<String>, user: impl Into<String>) -> Self {
        Conversation {
            messages: vec![Message::system(system), Message::developer(developer), Message::user(user)],
        }
    }

    pub fn push(&mut self, msg: Message) {
        self.messages.push(msg);
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Messages after the three-message bootstrap.
    pub fn turns(&self) -> &[Message] {
        self.messages.get(3..).unwrap_or(&[])
    }
}
