//! Special-token table for the Harmony wire format.
//!
//! Every delimiter the codec emits or accepts is defined here and nowhere
//! else. The strings are bit-exact; see `docs/harmony-format.md`.

/// Opens a message; followed by the header.
pub const START: &str = "<|start|>";
/// Separates the header from the content.
pub const MESSAGE: &str = "<|message|>";
/// Generic end-of-message terminal.
pub const END: &str = "<|end|>";
/// Terminal for an assistant message that hands control to a tool.
pub const CALL: &str = "<|call|>";
/// Terminal for an assistant message that ends sampling with a final answer.
pub const RETURN: &str = "<|return|>";
/// Header marker introducing the channel name.
pub const CHANNEL: &str = "<|channel|>";
/// Header marker introducing a constrained content type (e.g. `json`).
pub const CONSTRAIN: &str = "<|constrain|>";
/// Recipient prefix inside a header.
pub const RECIPIENT_PREFIX: &str = "to=";

/// All special-token strings. Message content may not contain any of them.
pub const SPECIAL_TOKENS: [&str; 7] = [START, MESSAGE, END, CALL, RETURN, CHANNEL, CONSTRAIN];

/// Terminals the parser accepts at the end of a message body.
pub const TERMINALS: [&str; 3] = [END, CALL, RETURN];

/// Stop strings registered with the completion server so sampling halts at
/// assistant turn boundaries.
pub const ASSISTANT_STOP_STRINGS: [&str; 2] = [CALL, RETURN];

/// Returns the first special-token string contained in `text`, if any.
pub fn find_special_token(text: &str) -> Option<&'static str> {
    if !text.contains("<|") {
        return None;
    }
    SPECIAL_TOKENS.iter().copied().find(|t| text.contains(t))
}

/// Rewrites every special-token occurrence so the text can be embedded in a
/// message body. `<|end|>` becomes `<\|end|>`; no other bytes change.
pub fn defuse_special_tokens(text: &str) -> String {
    let mut out = text.to_string();
    for token in SPECIAL_TOKENS {
        if out.contains(token) {
            let defused = format!("<\\|{}", &token[2..]);
            out = out.replace(token, &defused);
        }
    }
    out
}
