#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use harmony_agent::codec::tokens::find_special_token;
use harmony_agent::codec::{Channel, Conversation, Message};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// A runner with a fixed seed, for drawing reproducible samples outside `proptest!`.
pub fn seeded_runner(seed: u8) -> TestRunner {
    TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

pub fn draw<S: Strategy>(s: &S, runner: &mut TestRunner) -> S::Value {
    s.new_tree(runner).expect("strategy produces a value").current()
}

pub fn content() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        4 => any::<String>(),
        1 => Just("<|".to_string()),
        1 => Just("|>".to_string()),
        1 => Just("<|endoftext|>".to_string()),
        1 => Just("\n".to_string()),
        1 => Just("to=x".to_string()),
        1 => Just(" {\"path\": \".\"} ".to_string()),
    ];
    prop::collection::vec(piece, 0..5)
        .prop_map(|v| v.concat())
        .prop_filter("content must not contain special tokens", |s| find_special_token(s).is_none())
}

pub fn qualified_name() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,8}(\\.[a-z_][a-z0-9_-]{0,8}){0,2}"
}

pub fn channel() -> impl Strategy<Value = Channel> {
    prop_oneof![Just(Channel::Analysis), Just(Channel::Commentary), Just(Channel::Final)]
}

/// A message that can appear after the bootstrap: assistant output on any
/// channel, a tool call, or a tool result.
pub fn turn_message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (channel(), content()).prop_map(|(c, t)| Message::assistant(c, t)),
        (qualified_name(), content(), any::<bool>()).prop_map(|(r, t, typed)| {
            let m = Message::tool_call(r, t);
            if typed {
                m
            } else {
                Message {
                    content_type: None,
                    ..m
                }
            }
        }),
        (qualified_name(), content()).prop_map(|(n, t)| Message::tool_result(n, Channel::Commentary, t)),
    ]
}

pub fn conversation() -> impl Strategy<Value = Conversation> {
    (content(), content(), content(), prop::collection::vec(turn_message(), 0..8)).prop_map(|(s, d, u, turns)| {
        let mut c = Conversation::bootstrap(s, d, u);
        c.messages.extend(turns);
        c
    })
}

/// One contiguous edit of a file with unique lines.
#[derive(Debug, Clone)]
pub struct SpliceCase {
    pub lines: Vec<String>,
    pub trailing_newline: bool,
    pub start: usize,
    pub delete: usize,
    pub insert: Vec<String>,
}

impl SpliceCase {
    pub fn original(&self) -> String {
        let mut s = self.lines.join("\n");
        if self.trailing_newline {
            s.push('\n');
        }
        s
    }

    /// The expected file after the edit, computed by direct splicing.
    pub fn expected(&self) -> String {
        let mut lines = self.lines.clone();
        lines.splice(self.start..self.start + self.delete, self.insert.iter().cloned());
        if lines.is_empty() {
            return String::new();
        }
        let mut s = lines.join("\n");
        if self.trailing_newline {
            s.push('\n');
        }
        s
    }

    /// A one-hunk patch with up to three lines of context on each side.
    pub fn patch(&self, path: &str) -> String {
        let before = &self.lines[self.start.saturating_sub(3)..self.start];
        let end = self.start + self.delete;
        let after = &self.lines[end..(end + 3).min(self.lines.len())];
        let mut p = format!("*** Begin Patch\n*** Update File: {path}\n@@\n");
        for l in before {
            p.push_str(&format!(" {l}\n"));
        }
        for l in &self.lines[self.start..end] {
            p.push_str(&format!("-{l}\n"));
        }
        for l in &self.insert {
            p.push_str(&format!("+{l}\n"));
        }
        for l in after {
            p.push_str(&format!(" {l}\n"));
        }
        p.push_str("*** End Patch\n");
        p
    }
}

pub fn splice_case() -> impl Strategy<Value = SpliceCase> {
    (prop::collection::vec("[a-zA-Z0-9 (){};=]{0,16}[a-z;]", 1..40), any::<bool>())
        .prop_flat_map(|(words, trailing)| {
            let n = words.len();
            let lines: Vec<String> = words.into_iter().enumerate().map(|(i, w)| format!("{i:03} {w}")).collect();
            (Just(lines), Just(trailing), 0..=n)
        })
        .prop_flat_map(|(lines, trailing, start)| {
            let max_del = (lines.len() - start).min(3);
            (
                Just(lines),
                Just(trailing),
                Just(start),
                0..=max_del,
                prop::collection::vec("[ -~]{0,20}", 0..4),
            )
        })
        .prop_map(|(lines, trailing_newline, start, delete, insert)| SpliceCase {
            lines,
            trailing_newline,
            start,
            delete,
            insert,
        })
}

/// Every file and directory under `root`, keyed by relative path; directories map to `None`.
pub fn snapshot(root: &Path) -> BTreeMap<String, Option<Vec<u8>>> {
    walkdir::WalkDir::new(root)
        .min_depth(1)
        .into_iter()
        .map(|e| e.expect("walk"))
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            let body = e.file_type().is_file().then(|| std::fs::read(e.path()).unwrap());
            (rel, body)
        })
        .collect()
}

/// Completion text continuing `<|start|>assistant` with a tool call.
pub fn call_completion(recipient: &str, args: &str) -> String {
    format!("<|channel|>analysis<|message|>Next I call {recipient}.<|end|><|start|>assistant<|channel|>commentary to={recipient} <|constrain|>json<|message|>{args}")
}

pub fn final_completion(text: &str) -> String {
    format!("<|channel|>analysis<|message|>Done.<|end|><|start|>assistant<|channel|>final<|message|>{text}")
}

/// One scripted model reply, drawn from a mix of good and bad completions.
pub fn scripted_reply() -> impl Strategy<Value = harmony_agent::client::ScriptedCompletion> {
    use harmony_agent::client::ScriptedCompletion as S;
    prop_oneof![
        3 => Just(S::stop(call_completion("repo_browser.print_tree", r#"{"path":".","depth":1}"#))),
        2 => Just(S::stop(call_completion("repo_browser.open_file", r#"{"path":"notes.txt"}"#))),
        1 => Just(S::stop(call_completion("repo_browser.list_dir", r#"{"path":"."}"#))),
        1 => Just(S::stop(call_completion("container.exec", r#"{"cmd":"echo hi"}"#))),
        1 => Just(S::stop(call_completion("repo_browser.delete_file", r#"{"path":"notes.txt"}"#))),
        1 => Just(S::stop(call_completion("repo_browser.open_file", r#"{"nope":1}"#))),
        2 => Just(S::stop("plain text with no structure")),
        1 => Just(S::with_finish("<|channel|>analysis<|message|>thinking", "length")),
        1 => Just(S::stop(final_completion("Finished."))),
    ]
}

/// A workspace directory with one text file.
pub fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("notes.txt"), "alpha\nbeta\n").unwrap();
    dir
}

pub fn agent_in(root: &Path, cfg: harmony_agent::AgentConfig) -> harmony_agent::Agent {
    harmony_agent::Agent::new(
        cfg,
        harmony_agent::ToolRegistry::default_inventory(),
        harmony_agent::sandbox::SandboxConfig::new(root.to_path_buf()),
    )
    .unwrap()
}

/// Small limits so random scripts reach every termination kind quickly.
pub fn small_config(max_retries: u32, step_limit: u32) -> harmony_agent::AgentConfig {
    harmony_agent::AgentConfig {
        max_retries,
        step_limit,
        ..harmony_agent::AgentConfig::default()
    }
}
