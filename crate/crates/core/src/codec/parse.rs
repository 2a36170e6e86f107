use super::message::{is_qualified_name, Channel, Message, Role};
use super::tokens::{self, CHANNEL, CONSTRAIN, MESSAGE, RECIPIENT_PREFIX, START, TERMINALS};
use super::CodecError;

#[derive(Debug, Default)]
struct Header {
    role: Option<Role>,
    name: Option<String>,
    channel: Option<Channel>,
    recipient: Option<String>,
    content_type: Option<String>,
}

fn parse_err(msg: impl Into<String>) -> CodecError {
    CodecError::Parse(msg.into())
}

/// Parses a header. Field order is free; role comes first unless it was
/// supplied implicitly by the prompt's trailing `<|start|>assistant`.
fn parse_header(raw: &str, implicit_role: Option<Role>) -> Result<Header, CodecError> {
    let spaced = raw
        .replace(CHANNEL, &format!(" {CHANNEL}"))
        .replace(CONSTRAIN, &format!(" {CONSTRAIN}"));
    let mut words = spaced.split_whitespace();
    let mut header = Header::default();

    match implicit_role {
        Some(role) => {
            // The continuation must not glue characters onto the role keyword.
            if !(raw.is_empty() || raw.starts_with(char::is_whitespace) || raw.starts_with(CHANNEL)) {
                return Err(parse_err(format!("malformed header continuation `{raw}`")));
            }
            header.role = Some(role);
        }
        None => {
            let word = words.next().ok_or_else(|| parse_err("empty header"))?;
            if word.starts_with("<|") || word.starts_with(RECIPIENT_PREFIX) {
                return Err(parse_err(format!("header does not start with a role: `{raw}`")));
            }
            if let Some(role) = Role::from_keyword(word) {
                header.role = Some(role);
            } else if is_qualified_name(word) {
                header.role = Some(Role::Tool);
                header.name = Some(word.to_string());
            } else {
                return Err(parse_err(format!("unknown role `{word}`")));
            }
        }
    }

    for word in words {
        if let Some(value) = word.strip_prefix(CHANNEL) {
            if header.channel.is_some() {
                return Err(parse_err("duplicate channel"));
            }
            let channel = value
                .parse::<Channel>()
                .map_err(|_| parse_err(format!("unknown channel `{value}`")))?;
            header.channel = Some(channel);
        } else if let Some(value) = word.strip_prefix(RECIPIENT_PREFIX) {
            if header.recipient.is_some() {
                return Err(parse_err("duplicate recipient"));
            }
            header.recipient = Some(value.to_string());
        } else if let Some(value) = word.strip_prefix(CONSTRAIN) {
            if value.is_empty() || value.contains("<|") {
                return Err(parse_err(format!("malformed content type `{word}`")));
            }
            if header.content_type.is_some() {
                return Err(parse_err("duplicate content type"));
            }
            header.content_type = Some(value.to_string());
        } else if word.contains("<|") {
            return Err(parse_err(format!("unexpected token in header `{word}`")));
        } else if header.content_type.is_none() {
            header.content_type = Some(word.to_string());
        } else {
            return Err(parse_err(format!("unexpected header field `{word}`")));
        }
    }
    Ok(header)
}

fn into_message(header: Header, content: &str) -> Result<Message, CodecError> {
    let role = header.role.expect("role always set by parse_header");
    if role != Role::System && header.channel.is_none() {
        return Err(CodecError::MissingChannel { role });
    }
    if let Some(recipient) = &header.recipient {
        if !is_qualified_name(recipient) {
            return Err(CodecError::ToolName(recipient.clone()));
        }
    }
    Ok(Message {
        role,
        name: header.name,
        channel: header.channel,
        recipient: header.recipient,
        content_type: header.content_type,
        content: content.to_string(),
    })
}

/// Finds the earliest terminal at or after the start of `body`.
fn find_terminal(body: &str) -> Option<(usize, &'static str)> {
    TERMINALS
        .iter()
        .filter_map(|t| body.find(t).map(|i| (i, *t)))
        .min_by_key(|(i, _)| *i)
}

/// Parses raw model output into messages.
///
/// Text that does not begin with `<|start|>` is treated as the continuation of
/// an assistant header (the prompt ends with `<|start|>assistant`). Messages
/// may close with `<|end|>`, `<|call|>` or `<|return|>`; the last message may
/// also run to the end of the text, since servers strip stop strings.
/// Content is preserved byte-exact.
pub fn parse_completion(text: &str) -> Result<Vec<Message>, CodecError> {
    let mut messages = Vec::new();
    if text.trim().is_empty() {
        return Ok(messages);
    }

    let mut rest = text;
    let mut implicit = if rest.starts_with(START) {
        None
    } else {
        Some(Role::Assistant)
    };

    loop {
        if implicit.is_none() {
            rest = rest
                .strip_prefix(START)
                .ok_or_else(|| parse_err(format!("expected {START}, found `{}`", preview(rest))))?;
        }
        let header_end = rest
            .find(MESSAGE)
            .ok_or_else(|| parse_err(format!("header without {MESSAGE}")))?;
        let raw_header = &rest[..header_end];
        if raw_header.contains(START) {
            return Err(parse_err("nested <|start|> inside header"));
        }
        for bad in TERMINALS {
            if raw_header.contains(bad) {
                return Err(parse_err(format!("terminal {bad} inside header")));
            }
        }
        let header = parse_header(raw_header, implicit.take())?;
        let body = &rest[header_end + MESSAGE.len()..];

        let (content, after) = match find_terminal(body) {
            Some((idx, term)) => (&body[..idx], Some(&body[idx + term.len()..])),
            None => (body, None),
        };
        if let Some(token) = tokens::find_special_token(content) {
            return Err(parse_err(format!("unexpected {token} inside message content")));
        }
        messages.push(into_message(header, content)?);

        match after {
            None => break,
            Some(after) if after.trim().is_empty() => break,
            Some(after) => rest = after,
        }
    }
    Ok(messages)
}

fn preview(s: &str) -> String {
    s.chars().take(32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::render_message;
    use crate::exception::ExceptionKind;

    #[test]
    fn analysis_then_final() {
        let text = "<|channel|>analysis<|message|>Think.<|end|><|start|>assistant<|channel|>final<|message|>Done.<|return|>";
        let msgs = parse_completion(text).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].channel, Some(Channel::Analysis));
        assert_eq!(msgs[0].content, "Think.");
        assert_eq!(msgs[1].channel, Some(Channel::Final));
        assert_eq!(msgs[1].role, Role::Assistant);
    }

    #[test]
    fn empty_completion() {
        assert!(parse_completion("").unwrap().is_empty());
        assert!(parse_completion("  \n").unwrap().is_empty());
    }

    #[test]
    fn stop_string_stripped() {
        let text = "<|channel|>commentary to=repo_browser.print_tree <|constrain|>json<|message|>{\"path\":\".\"}";
        let msgs = parse_completion(text).unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].recipient.as_deref(), Some("repo_browser.print_tree"));
        assert_eq!(msgs[0].content_type.as_deref(), Some("json"));
        assert_eq!(msgs[0].content, "{\"path\":\".\"}");
    }

    #[test]
    fn any_header_order() {
        let text = "<|start|>assistant to=container.exec<|channel|>commentary json<|message|>{}<|call|>";
        let m = &parse_completion(text).unwrap()[0];
        assert_eq!(m.recipient.as_deref(), Some("container.exec"));
        assert_eq!(m.channel, Some(Channel::Commentary));
        assert_eq!(m.content_type.as_deref(), Some("json"));
    }

    #[test]
    fn round_trip_single() {
        let m = Message::tool_call("repo_browser.print_tree", r#"{"path":".","depth":2}"#);
        let parsed = parse_completion(&render_message(&m).unwrap()).unwrap();
        assert_eq!(parsed, vec![m]);
    }

    #[test]
    fn tool_role_from_header() {
        let text = "<|start|>repo_browser.open_file<|channel|>commentary to=assistant<|message|>1\tx<|end|>";
        let m = &parse_completion(text).unwrap()[0];
        assert_eq!(m.role, Role::Tool);
        assert_eq!(m.name.as_deref(), Some("repo_browser.open_file"));
    }

    fn kind_of(text: &str) -> ExceptionKind {
        parse_completion(text).unwrap_err().kind()
    }

    #[test]
    fn malformed_inputs() {
        use ExceptionKind::*;
        assert_eq!(kind_of("just some prose"), HarmonyParsingError);
        assert_eq!(kind_of("hello<|message|>x"), HarmonyParsingError);
        assert_eq!(kind_of("<|start|>assistant<|channel|>final"), HarmonyParsingError);
        assert_eq!(kind_of("<|channel|>final<|message|>a<|end|>junk"), HarmonyParsingError);
        assert_eq!(kind_of("<|channel|>bogus<|message|>a<|end|>"), HarmonyParsingError);
        assert_eq!(kind_of("<|start|>wizard!<|channel|>final<|message|>a<|end|>"), HarmonyParsingError);
        assert_eq!(kind_of("<|channel|>final<|message|>a<|start|>assistant"), HarmonyParsingError);
        assert_eq!(
            kind_of("<|channel|>final<|channel|>final<|message|>a<|end|>"),
            HarmonyParsingError
        );
    }

    #[test]
    fn missing_channel() {
        assert_eq!(kind_of("<|message|>hi<|end|>"), ExceptionKind::HarmonyMessageMissingChannel);
        assert_eq!(
            kind_of("<|start|>assistant<|message|>hi<|end|>"),
            ExceptionKind::HarmonyMessageMissingChannel
        );
        // System messages are exempt.
        assert!(parse_completion("<|start|>system<|message|>hi<|end|>").is_ok());
    }

    #[test]
    fn bad_tool_name() {
        assert_eq!(
            kind_of("<|channel|>commentary to=repo_browser.<|message|>{}<|call|>"),
            ExceptionKind::ToolNameParsingError
        );
        assert_eq!(
            kind_of("<|channel|>commentary to=<|message|>{}<|call|>"),
            ExceptionKind::ToolNameParsingError
        );
    }

    #[test]
    fn content_preserved_byte_exact() {
        let content = "  leading\r\n\ttabs and ünïcödé  \n\n";
        let text = format!("<|channel|>final<|message|>{content}<|return|>");
        assert_eq!(parse_completion(&text).unwrap()[0].content, content);
    }
}
