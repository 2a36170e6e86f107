//! Token counting behind a pluggable interface.
//!
//! The harness needs token counts for context-overflow checks, usage
//! fallback, and overhead accounting. Exact BPE counts depend on the serving
//! model's vocabulary, so the default implementation is a deterministic
//! approximation; plug in a real tokenizer through [`Tokenizer`].

use crate::codec::tokens::SPECIAL_TOKENS;

pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// Approximates a byte-pair tokenizer.
///
/// Special tokens count as one token each. Word runs count one token per
/// four characters (rounded up), with a single leading space absorbed into
/// the word. Other whitespace runs count one, and every other character
/// counts one.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicTokenizer;

impl HeuristicTokenizer {
    fn count_plain(text: &str) -> usize {
        let mut total = 0;
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if c.is_alphanumeric() || c == '_' {
                let mut len: usize = 1;
                while chars.peek().is_some_and(|c| c.is_alphanumeric() || *c == '_') {
                    chars.next();
                    len += 1;
                }
                total += len.div_ceil(4);
            } else if c.is_whitespace() {
                let mut single_space = c == ' ';
                while chars.peek().is_some_and(|c| c.is_whitespace()) {
                    chars.next();
                    single_space = false;
                }
                let glued = chars.peek().is_some_and(|c| c.is_alphanumeric() || *c == '_');
                if !(single_space && glued) {
                    total += 1;
                }
            } else {
                total += 1;
            }
        }
        total
    }
}

impl Tokenizer for HeuristicTokenizer {
    fn count(&self, text: &str) -> usize {
        let mut total = 0;
        let mut rest = text;
        while let Some(start) = rest.find("<|") {
            match SPECIAL_TOKENS.iter().find(|t| rest[start..].starts_with(**t)) {
                Some(token) => {
                    total += Self::count_plain(&rest[..start]) + 1;
                    rest = &rest[start + token.len()..];
                }
                None => {
                    total += Self::count_plain(&rest[..start + 2]);
                    rest = &rest[start + 2..];
                }
            }
        }
        total + Self::count_plain(rest)
    }
}
