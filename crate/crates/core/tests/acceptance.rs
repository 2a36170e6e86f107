//! Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion and
//! exits nonzero if anything failed.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{agent_in, call_completion, draw, final_completion, seeded_runner, snapshot, splice_case, workspace};
use harmony_agent::agent::{ActionRecord, Event, Termination, TurnRecord};
use harmony_agent::analytics::{
    bootstrap_ci, call_rate_lift, indicator_samples, prober_crossref, token_overhead, CrossrefOptions, Lift,
    Verdict,
};
use harmony_agent::client::{HttpBackend, HttpConfig, ScriptedBackend, ScriptedCompletion};
use harmony_agent::codec::{parse_completion, render_conversation_with, render_message, validate_turn, Action};
use harmony_agent::patch::{apply_patch, apply_patch_with, parse_patch, ApplyOptions};
use harmony_agent::registry::Placement;
use harmony_agent::sandbox::{canonical_root, execute_tool, resolve_in, SandboxConfig};
use harmony_agent::{AgentConfig, Channel, ExceptionKind, Message, Task, Tier, ToolRegistry, Trajectory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = Result<Outcome, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn pass(detail: impl Into<String>) -> Check {
    Ok(Outcome::Pass(detail.into()))
}

fn codec_round_trip() -> Check {
    let reg = ToolRegistry::default_inventory();
    let mut runner = seeded_runner(7);
    let strategy = (common::conversation(), any::<bool>(), any::<bool>());
    let started = Instant::now();
    for i in 0..1000 {
        let (conv, with_tools, dev) = draw(&strategy, &mut runner);
        let tools = if with_tools { reg.specs() } else { &[] };
        let placement = if dev { Placement::Developer } else { Placement::System };
        let text = render_conversation_with(&conv, tools, placement).map_err(|e| format!("case {i}: {e}"))?;
        let turns_text: String = conv.turns().iter().map(|m| render_message(m).unwrap()).collect();
        let body = text
            .strip_suffix("<|start|>assistant")
            .and_then(|t| t.strip_suffix(turns_text.as_str()))
            .ok_or(format!("case {i}: turns are not a suffix of the prompt"))?;
        ensure!(!body.is_empty(), "case {i}: empty bootstrap");
        let parsed = parse_completion(&turns_text).map_err(|e| format!("case {i}: {e}"))?;
        ensure!(parsed == conv.turns(), "case {i}: parse(render(c)) differs");
    }
    let took = started.elapsed();
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    pass(format!("1000 conversations in {:.2}s", took.as_secs_f64()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    Analysis,
    Final,
    Call,
    Preamble,
}

fn shape_message(s: Shape) -> Message {
    match s {
        Shape::Analysis => Message::assistant(Channel::Analysis, "thinking"),
        Shape::Final => Message::assistant(Channel::Final, "answer"),
        Shape::Call => Message::tool_call("repo_browser.print_tree", "{}"),
        Shape::Preamble => Message::assistant(Channel::Commentary, "about to look"),
    }
}

/// Classification by message counts alone.
fn matrix(shapes: &[Shape]) -> Result<&'static str, ExceptionKind> {
    let count = |s: Shape| shapes.iter().filter(|&&x| x == s).count();
    let (a, f, c) = (count(Shape::Analysis), count(Shape::Final), count(Shape::Call));
    if a > 1 {
        Err(ExceptionKind::MultipleReasoningMessages)
    } else if f > 1 {
        Err(ExceptionKind::MultipleFinalMessages)
    } else if c > 1 {
        Err(ExceptionKind::MultipleToolCalls)
    } else if c == 0 && f == 0 {
        Err(ExceptionKind::NoToolCallNoFinalMessage)
    } else if c == 1 && f == 1 {
        Err(ExceptionKind::ToolCallAndFinalMessage)
    } else if c == 1 {
        Ok("call")
    } else {
        Ok("final")
    }
}

fn turn_matrix() -> Check {
    let all = [Shape::Analysis, Shape::Final, Shape::Call, Shape::Preamble];
    let mut sequences: Vec<Vec<Shape>> = vec![vec![]];
    let mut frontier = sequences.clone();
    for _ in 0..4 {
        frontier = frontier
            .iter()
            .flat_map(|seq| all.iter().map(move |&s| [seq.clone(), vec![s]].concat()))
            .collect();
        sequences.extend(frontier.clone());
    }
    ensure!(sequences.len() == 341, "enumerated {} sequences", sequences.len());
    let mut kinds = BTreeSet::new();
    for seq in &sequences {
        let msgs: Vec<Message> = seq.iter().map(|&s| shape_message(s)).collect();
        let text: String = msgs.iter().map(|m| render_message(m).unwrap()).collect();
        let parsed = parse_completion(&text).map_err(|e| format!("{seq:?}: {e}"))?;
        let got = validate_turn(&parsed);
        let want = matrix(seq);
        let agrees = match (&got, want) {
            (Ok(out), Ok("call")) => matches!(out.action, Action::ToolCall(_)),
            (Ok(out), Ok(_)) => matches!(out.action, Action::Final(_)),
            (Err(e), Err(k)) => {
                kinds.insert(k);
                e.kind() == k
            }
            _ => false,
        };
        ensure!(agrees, "{seq:?}: got {got:?}, expected {want:?}");
    }
    ensure!(kinds.len() == 5, "only {} error kinds reached", kinds.len());
    pass("341/341 sequences agree; all 5 validation errors reached")
}

fn taxonomy() -> Check {
    let names = |tier: Tier| -> Vec<&str> {
        ExceptionKind::ALL.iter().filter(|k| k.tier() == tier).map(|k| k.name()).collect()
    };
    let non = [
        "LongGeneration",
        "HarmonyParsingError",
        "HarmonyMessageMissingChannel",
        "MultipleReasoningMessages",
        "MultipleFinalMessages",
        "MultipleToolCalls",
        "NoToolCallNoFinalMessage",
        "ToolCallAndFinalMessage",
        "ToolNameParsingError",
        "UnknownToolCalled",
        "UnknownToolCallArg",
        "ToolCallArgParsingError",
        "ExecutionTimeoutError",
    ];
    let term = [
        "Submitted",
        "LimitsExceeded",
        "MaxContextWindowOverflow",
        "UnexpectedFinishReason",
        "MaxNewTokensExceeded",
        "RetrialsExceeded",
    ];
    ensure!(names(Tier::NonTerminating) == non, "non-terminating: {:?}", names(Tier::NonTerminating));
    ensure!(names(Tier::Terminating) == term, "terminating: {:?}", names(Tier::Terminating));

    let dir = workspace();
    let cfg = AgentConfig::default();
    ensure!(cfg.max_retries == 10, "default max_retries {}", cfg.max_retries);
    let mut backend =
        ScriptedBackend::new((0..30).map(|_| ScriptedCompletion::stop("no structure at all")).collect()).unwrap();
    let traj = agent_in(dir.path(), cfg).run(&Task::new("anything"), &mut backend).unwrap();
    ensure!(traj.termination.kind == ExceptionKind::RetrialsExceeded, "ended {}", traj.termination.kind);
    ensure!(traj.queries() == 11, "{} attempts", traj.queries());
    pass("13 NonTerminating + 6 Terminating; RetrialsExceeded after 11 attempts")
}

/// Probe counts: (tool, mentions of 160, actual calls, expected verdict).
const PROBE_COUNTS: [(&str, usize, usize, Verdict); 8] = [
    ("print_tree", 45, 101, Verdict::Confirmed),
    ("search", 55, 11, Verdict::Confirmed),
    ("open_file", 71, 3, Verdict::Confirmed),
    ("apply_patch", 4, 8, Verdict::Confirmed),
    ("read_file", 40, 1, Verdict::LikelyAlias),
    ("list_files", 17, 2, Verdict::LikelyAlias),
    ("delete_file", 14, 0, Verdict::Confabulated),
    ("write_file", 12, 0, Verdict::Confabulated),
];

fn turn_record(turn: u32, completion: String) -> TurnRecord {
    TurnRecord {
        restart: 0,
        turn,
        attempt: 1,
        prompt_tokens: 0,
        server_prompt_tokens: None,
        completion,
        finish_reason: Some("stop".into()),
        completion_tokens: 0,
        usage_estimated: true,
        action: None,
        exception: None,
        tool_result: None,
    }
}

fn registry_checks() -> Check {
    let reg = ToolRegistry::default_inventory();

    let samples: Vec<String> = (0..160)
        .map(|i| {
            PROBE_COUNTS
                .iter()
                .filter(|(_, mentions, _, _)| i < *mentions)
                .map(|(name, ..)| format!("call repo_browser.{name} twice: repo_browser.{name}."))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let dir = workspace();
    let agent = agent_in(dir.path(), AgentConfig::default());
    let mut events = Vec::new();
    for (name, _, calls, _) in PROBE_COUNTS {
        for _ in 0..calls {
            let n = events.len() as u32 + 1;
            events.push(Event::Turn(turn_record(n, call_completion(&format!("repo_browser.{name}"), "{}"))));
        }
    }
    let log = Trajectory {
        header: agent.header(&Task::new("probe")),
        events,
        termination: Termination::new(ExceptionKind::LimitsExceeded, "synthetic"),
    };
    let rows = prober_crossref(&samples, &[log], &reg, &CrossrefOptions::default()).map_err(|e| e.to_string())?;
    let mut matched = 0;
    for (name, mentions, calls, verdict) in PROBE_COUNTS {
        let row = rows.iter().find(|r| r.evidence.name == name).ok_or(format!("no row for {name}"))?;
        ensure!(
            row.evidence.text_mentions == mentions && row.evidence.actual_calls == calls,
            "{name}: {:?}",
            row.evidence
        );
        ensure!(row.verdict == verdict, "{name}: verdict {} expected {}", row.verdict, verdict);
        matched += 1;
    }

    let mut aliases = 0;
    for spec in reg.specs() {
        for alias in &spec.aliases {
            let r = reg
                .resolve_tool(&format!("{}.{alias}", spec.namespace))
                .map_err(|e| e.to_string())?;
            ensure!(r.via_alias && r.spec == spec, "{alias} does not collapse to {}", spec.name);
            aliases += 1;
        }
    }
    for name in ["repo_browser.delete_file", "repo_browser.write_file"] {
        let err = reg.resolve_tool(name).err().ok_or(format!("{name} resolved"))?;
        ensure!(err.kind() == Some(ExceptionKind::UnknownToolCalled), "{name}: {err}");
    }
    pass(format!("{matched}/8 verdict rows; {aliases} aliases collapse; confabulated names rejected"))
}

fn statistics() -> Check {
    let started = Instant::now();
    let samples = indicator_samples(45, 160);
    let seeds = 0..20u64;
    let cis: Vec<_> = seeds.clone().map(|s| bootstrap_ci(&samples, 1000, 0.95, s).unwrap()).collect();
    let point = cis[0].point * 100.0;
    let lo = cis.iter().map(|c| c.lo).sum::<f64>() / cis.len() as f64 * 100.0;
    let hi = cis.iter().map(|c| c.hi).sum::<f64>() / cis.len() as f64 * 100.0;
    ensure!(format!("{point:.1}") == "28.1", "point {point}");
    ensure!((lo - 21.2).abs() <= 1.5 && (hi - 35.0).abs() <= 1.5, "interval [{lo:.2}, {hi:.2}]");

    let lift = |b: usize, w: usize| {
        call_rate_lift(&indicator_samples(b, 1000), &indicator_samples(w, 1000), 1000, 0.95, 0).unwrap().lift
    };
    let l1 = lift(294, 986);
    let l2 = lift(38, 588);
    ensure!(l1.to_string() == "3.4×", "first lift {l1}");
    ensure!(l2.to_string() == "15×", "second lift {l2}");
    let r2 = l2.ratio().unwrap();
    ensure!((r2 - 15.0).abs() <= 1.0, "second lift ratio {r2}");
    ensure!(lift(0, 5) == Lift::Unbounded, "zero baseline not unbounded");

    let a = bootstrap_ci(&samples, 1000, 0.95, 99).unwrap();
    let b = bootstrap_ci(&samples, 1000, 0.95, 99).unwrap();
    ensure!(a.lo.to_bits() == b.lo.to_bits() && a.hi.to_bits() == b.hi.to_bits(), "seeded runs differ");

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let covered = (0..200u64)
        .filter(|&t| {
            let s: Vec<bool> = (0..160).map(|_| rng.gen_bool(0.28)).collect();
            let ci = bootstrap_ci(&s, 1000, 0.95, t).unwrap();
            ci.lo <= 0.28 && 0.28 <= ci.hi
        })
        .count();
    ensure!(covered >= 180, "coverage {covered}/200");

    let took = started.elapsed();
    ensure!(took < Duration::from_secs(60), "suite took {took:?}");
    pass(format!(
        "28.1% [{lo:.1}, {hi:.1}] over 20 seeds; lifts {l1} and {l2}; coverage {covered}/200; {:.2}s",
        took.as_secs_f64()
    ))
}

fn token_accounting() -> Check {
    let mut runner = seeded_runner(3);
    let strategy = prop::collection::vec(common::scripted_reply(), 1..20);
    let mut turns = 0;
    for i in 0..200 {
        let dir = workspace();
        let agent = agent_in(dir.path(), common::small_config(2, 8));
        let script = draw(&strategy, &mut runner);
        let traj = agent.run(&Task::new("look around"), &mut ScriptedBackend::new(script).unwrap()).unwrap();
        let tooldef = agent.tooldef_tokens();
        let s = token_overhead(&traj, tooldef).summary;
        ensure!(
            s.chat_total - s.harmony_total == s.turns * tooldef,
            "trajectory {i}: {} - {} != {} x {}",
            s.chat_total,
            s.harmony_total,
            s.turns,
            tooldef
        );
        turns += s.turns;
    }
    pass(format!("identity exact on 200 trajectories ({turns} queries)"))
}

fn patch_engine() -> Check {
    let mut runner = seeded_runner(5);
    let strategy = splice_case();
    for i in 0..500 {
        let case = draw(&strategy, &mut runner);
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.txt"), case.original()).unwrap();
        let patch = parse_patch(&case.patch("f.txt")).map_err(|e| format!("edit {i}: {e}"))?;
        apply_patch(&patch, dir.path()).map_err(|e| format!("edit {i}: {e}"))?;
        let got = std::fs::read(dir.path().join("f.txt")).unwrap();
        ensure!(got == case.expected().into_bytes(), "edit {i}: result differs from splice");
    }

    let mut injected = 0;
    for i in 0..50 {
        let case = draw(&strategy, &mut runner);
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.txt"), case.original()).unwrap();
        std::fs::write(dir.path().join("old.txt"), "x\n").unwrap();
        let body = case.patch("f.txt");
        let body = body
            .strip_prefix("*** Begin Patch\n")
            .and_then(|b| b.strip_suffix("*** End Patch\n"))
            .unwrap();
        let text = format!(
            "*** Begin Patch\n*** Add File: made/new.txt\n+hello\n{body}*** Delete File: old.txt\n*** End Patch\n"
        );
        let patch = parse_patch(&text).unwrap();
        let writes = 2 + usize::from(case.original() != case.expected());
        let before = snapshot(dir.path());
        for fail_after in 0..writes {
            let res = apply_patch_with(&patch, dir.path(), ApplyOptions { fail_commit_after: Some(fail_after) });
            ensure!(res.is_err(), "case {i}: failure after {fail_after} writes not reported");
            ensure!(snapshot(dir.path()) == before, "case {i}: workspace changed after failure at {fail_after}");
            injected += 1;
        }
    }
    pass(format!("500 edits byte-exact; {injected} injected failures left the workspace unchanged"))
}

fn sandbox() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let outside = tempfile::tempdir().unwrap();
    std::fs::write(outside.path().join("secret.txt"), "s3cret\n").unwrap();
    let root = canonical_root(dir.path()).unwrap();
    std::fs::create_dir(root.join("src")).unwrap();
    std::os::unix::fs::symlink(outside.path(), root.join("escape")).unwrap();
    std::os::unix::fs::symlink(outside.path().join("secret.txt"), root.join("src/leak.txt")).unwrap();

    let outside_abs = outside.path().join("secret.txt").display().to_string();
    let attempts: Vec<String> = [
        "..",
        "../",
        "../..",
        "../etc/passwd",
        "src/../..",
        "src/../../x",
        "./../x",
        "a/b/../../..",
        "/",
        "/etc/passwd",
        "/tmp",
        "escape",
        "escape/secret.txt",
        "escape/new.txt",
        "src/leak.txt",
        "src/../escape/secret.txt",
        "src/./../../etc",
        "../../../../../../../../etc/shadow",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([outside_abs.clone(), format!("{}/../x", root.display())])
    .collect();
    ensure!(attempts.len() == 20, "{} attempts", attempts.len());
    let cfg = SandboxConfig::new(root.clone());
    let reg = ToolRegistry::default_inventory();
    let open = reg.resolve_tool("repo_browser.open_file").unwrap().spec;
    for a in &attempts {
        ensure!(resolve_in(&root, a).is_err(), "{a} resolved");
        let call = reg.validate_args(open, &serde_json::json!({ "path": a }).to_string()).unwrap();
        let out = execute_tool(&call, &cfg).map_err(|e| e.to_string())?;
        ensure!(out.starts_with("Error: "), "{a}: {out}");
        ensure!(!out.contains("s3cret"), "{a} leaked the file");
    }

    let mut cfg = SandboxConfig::new(root);
    cfg.timeout = Duration::from_secs(1);
    let exec = reg.resolve_tool("container.exec").unwrap().spec;
    let call = reg.validate_args(exec, r#"{"cmd":"sleep 30"}"#).unwrap();
    let started = Instant::now();
    let res = execute_tool(&call, &cfg);
    let took = started.elapsed();
    ensure!(
        res.as_ref().err().and_then(|e| e.kind()) == Some(ExceptionKind::ExecutionTimeoutError),
        "timeout not raised: {res:?}"
    );
    ensure!(took < Duration::from_secs(3), "returned after {took:?}");
    pass(format!("20/20 escapes rejected; 1s timeout returned in {:.2}s", took.as_secs_f64()))
}

fn seed_workspace(root: &Path) {
    std::fs::create_dir_all(root.join("src")).unwrap();
    std::fs::write(root.join("src/lib.rs"), "pub fn answer() -> u32 {\n    41\n}\n").unwrap();
    std::fs::write(root.join("README.md"), "demo crate\n").unwrap();
}

fn end_to_end() -> Check {
    let patch = "*** Begin Patch\n*** Update File: src/lib.rs\n@@\n pub fn answer() -> u32 {\n-    41\n+    42\n }\n*** End Patch\n";
    let script: Vec<ScriptedCompletion> = [
        call_completion("repo_browser.print_tree", r#"{"path":".","depth":2}"#),
        call_completion("repo_browser.search", r#"{"path":".","query":"answer"}"#),
        call_completion("repo_browser.open_file", r#"{"path":"src/lib.rs"}"#),
        call_completion("repo_browser.apply_patch", &serde_json::json!({ "patch": patch }).to_string()),
        call_completion("container.exec", r#"{"cmd":"grep -c 42 src/lib.rs"}"#),
        final_completion("answer() now returns 42."),
    ]
    .into_iter()
    .map(ScriptedCompletion::stop)
    .collect();

    let dir = tempfile::tempdir().unwrap();
    seed_workspace(dir.path());
    let task = Task::new("Make answer() return 42.");
    let agent = agent_in(dir.path(), AgentConfig::default());
    let traj = agent.run(&task, &mut ScriptedBackend::new(script).unwrap()).unwrap();
    ensure!(traj.termination.kind == ExceptionKind::Submitted, "ended {}: {}", traj.termination.kind, traj.termination.detail);
    ensure!(traj.queries() == 6 && traj.committed_turns() == 6, "{} queries", traj.queries());
    let tools: Vec<String> = traj
        .turns()
        .filter_map(|t| match &t.action {
            Some(ActionRecord::ToolCall { recipient, .. }) => Some(recipient.clone()),
            _ => None,
        })
        .collect();
    ensure!(tools.len() == 5, "tool calls {tools:?}");
    let patched = std::fs::read_to_string(dir.path().join("src/lib.rs")).unwrap();
    ensure!(patched == "pub fn answer() -> u32 {\n    42\n}\n", "file is {patched:?}");
    let exec_out = traj.turns().nth(4).and_then(|t| t.tool_result.clone()).unwrap_or_default();
    ensure!(exec_out == "1\n[exit code: 0]", "exec output {exec_out:?}");

    let jsonl = traj.to_jsonl();
    ensure!(Trajectory::from_jsonl(&jsonl).map_err(|e| e.to_string())? == traj, "JSONL round trip differs");

    let fresh = tempfile::tempdir().unwrap();
    seed_workspace(fresh.path());
    let replayed = agent_in(fresh.path(), AgentConfig::default())
        .run(&task, &mut ScriptedBackend::new(traj.to_script()).unwrap())
        .unwrap();
    ensure!(replayed == traj, "replay differs");
    ensure!(snapshot(fresh.path()) == snapshot(dir.path()), "replayed workspace differs");
    pass("6 turns, Submitted, file patched, JSONL and replay lossless")
}

fn live_smoke() -> Check {
    let Ok(endpoint) = std::env::var("HARMONY_AGENT_ENDPOINT") else {
        return Ok(Outcome::Skip("set HARMONY_AGENT_ENDPOINT (and HARMONY_AGENT_MODEL) to run".into()));
    };
    let model = std::env::var("HARMONY_AGENT_MODEL").unwrap_or_else(|_| "openai/gpt-oss-20b".into());
    let mut backend = HttpBackend::new(HttpConfig::new(endpoint, model)).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    let cfg = AgentConfig {
        step_limit: 20,
        ..AgentConfig::default()
    };
    let agent = harmony_agent::Agent::new(cfg, ToolRegistry::default_inventory(), SandboxConfig::new(dir.path().into()))
        .map_err(|e| e.to_string())?;
    let task = Task::new("Create a file named hello.txt containing the line `hello` using the apply_patch tool, then finish.");
    let traj = agent.run(&task, &mut backend).map_err(|e| e.to_string())?;
    ensure!(traj.termination.kind == ExceptionKind::Submitted, "ended {}: {}", traj.termination.kind, traj.termination.detail);
    ensure!(dir.path().join("hello.txt").is_file(), "hello.txt missing");
    pass(format!("Submitted after {} queries", traj.queries()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("codec-round-trip", codec_round_trip),
        ("turn-validation-matrix", turn_matrix),
        ("exception-taxonomy", taxonomy),
        ("registry-verdicts", registry_checks),
        ("statistics", statistics),
        ("token-accounting", token_accounting),
        ("patch-engine", patch_engine),
        ("sandbox", sandbox),
        ("end-to-end", end_to_end),
        ("live-smoke", live_smoke),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(Outcome::Pass(d)) => println!("PASS {name}: {d}"),
            Ok(Outcome::Skip(d)) => println!("SKIP {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
