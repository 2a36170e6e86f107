//! Fixtures shared by the benchmarks.

use harmony_agent::{Channel, Conversation, Message};

/// A conversation with `turns` tool round trips after the bootstrap.
pub fn conversation(turns: usize) -> Conversation {
    let mut c = Conversation::bootstrap(
        "You are a coding agent.\n\nReasoning: medium",
        "Fix the failing test.",
        "The test `parses_empty_input` fails on main. Find and fix the bug.",
    );
    for i in 0..turns {
        c.push(Message::assistant(Channel::Analysis, format!("Step {i}: look at the parser module again.")));
        c.push(Message::tool_call(
            "repo_browser.open_file",
            format!(r#"{{"path":"src/parser.rs","line_start":{},"line_end":{}}}"#, i * 20 + 1, i * 20 + 20),
        ));
        let body: String = (0..20).map(|l| format!("{}\tlet x{l} = parse(input)?;\n", i * 20 + l + 1)).collect();
        c.push(Message::tool_result("repo_browser.open_file", Channel::Commentary, body));
    }
    c
}

/// Completion text for one tool-calling turn.
pub fn call_completion() -> String {
    "<|channel|>analysis<|message|>I should open the parser.<|end|><|start|>assistant<|channel|>commentary to=repo_browser.open_file <|constrain|>json<|message|>{\"path\":\"src/parser.rs\",\"line_start\":1,\"line_end\":40}".to_string()
}

/// A source file of `lines` lines and a patch replacing one line near the middle.
pub fn patch_fixture(lines: usize) -> (String, String) {
    let file: String = (0..lines).map(|i| format!("line {i}\n")).collect();
    let mid = lines / 2;
    let patch = format!(
        "*** Begin Patch\n*** Update File: f.txt\n@@\n line {}\n line {}\n-line {mid}\n+line {mid} changed\n line {}\n*** End Patch\n",
        mid - 2,
        mid - 1,
        mid + 1
    );
    (file, patch)
}
