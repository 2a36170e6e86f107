use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use harmony_agent::agent::AgentError;
use harmony_agent::client::{
    Backend, HttpBackend, HttpConfig, RecordingBackend, ReplayBackend, ScriptedBackend, ScriptedCompletion,
};
use harmony_agent::sandbox::SandboxConfig;
use harmony_agent::{Agent, ToolRegistry, Trajectory};

use crate::args::RunArgs;
use crate::config::{BackendChoice, Settings};
use crate::{exit_code, Failure};

enum Script {
    Completions(Vec<ScriptedCompletion>),
    /// Raw JSONL of recorded request/response pairs.
    Exchanges(String),
}

fn load_script(path: &Path) -> Result<Script, Failure> {
    let doc = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let first: serde_json::Value = doc
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .transpose()
        .map_err(|e| Failure::Usage(format!("{}:1: {e}", path.display())))?
        .ok_or_else(|| Failure::Usage(format!("{} is empty", path.display())))?;
    if first.get("record").is_some() {
        let traj = Trajectory::from_jsonl(&doc).map_err(|e| Failure::Usage(crate::located(path, &e)))?;
        let script = traj.to_script();
        if script.is_empty() {
            return Err(Failure::Usage(format!("{} has no completions to serve", path.display())));
        }
        Ok(Script::Completions(script))
    } else if first.get("request").is_some() && first.get("response").is_some() {
        ReplayBackend::from_jsonl(&doc).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(Script::Exchanges(doc))
    } else {
        let mut items = Vec::new();
        for (i, line) in doc.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: ScriptedCompletion = serde_json::from_str(line)
                .map_err(|e| Failure::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
            items.push(item);
        }
        Ok(Script::Completions(items))
    }
}

struct BackendFactory {
    script: Option<Script>,
    http: Option<HttpConfig>,
    seed: Option<u64>,
}

impl BackendFactory {
    fn new(settings: &Settings) -> Result<Self, Failure> {
        Ok(match &settings.backend {
            BackendChoice::Script(path) => BackendFactory {
                script: Some(load_script(path)?),
                http: None,
                seed: settings.seed,
            },
            BackendChoice::Live { endpoint, model, api_key } => {
                let mut cfg = HttpConfig::new(endpoint.clone(), model.clone());
                cfg.api_key = api_key.clone();
                if let Some(t) = settings.http.request_timeout {
                    cfg.request_timeout = Duration::try_from_secs_f64(t)
                        .map_err(|_| Failure::Usage("http.request_timeout must be non-negative".into()))?;
                }
                if let Some(n) = settings.http.max_attempts {
                    cfg.retry.max_attempts = n;
                }
                if let Some(extra) = &settings.http.extra_body {
                    cfg.extra_body.extend(extra.clone());
                }
                BackendFactory {
                    script: None,
                    http: Some(cfg),
                    seed: settings.seed,
                }
            }
        })
    }

    fn make(&self, index: u64) -> Result<Box<dyn Backend + Send>, Failure> {
        match (&self.script, &self.http) {
            (Some(Script::Completions(items)), _) => Ok(Box::new(
                ScriptedBackend::new(items.clone()).map_err(|e| Failure::Usage(e.to_string()))?,
            )),
            (Some(Script::Exchanges(doc)), _) => Ok(Box::new(
                ReplayBackend::from_jsonl(doc).map_err(|e| Failure::Usage(e.to_string()))?,
            )),
            (None, Some(cfg)) => {
                let mut cfg = cfg.clone();
                if let Some(seed) = self.seed {
                    cfg.extra_body.insert("seed".into(), (seed + index).into());
                }
                Ok(Box::new(HttpBackend::new(cfg).map_err(|e| Failure::Usage(e.to_string()))?))
            }
            (None, None) => unreachable!("a backend is always selected"),
        }
    }
}

fn agent_error(e: AgentError) -> Failure {
    match e {
        AgentError::Sandbox(e) => Failure::Runtime(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

/// Recursively copies `from` into the new directory `to`, keeping symlinks as links.
fn copy_tree(from: &Path, to: &Path) -> std::io::Result<()> {
    for entry in walkdir::WalkDir::new(from) {
        let entry = entry?;
        let dest = to.join(entry.path().strip_prefix(from).expect("walk stays under root"));
        let ft = entry.file_type();
        if ft.is_dir() {
            fs::create_dir_all(&dest)?;
        } else if ft.is_symlink() {
            std::os::unix::fs::symlink(fs::read_link(entry.path())?, &dest)?;
        } else {
            fs::copy(entry.path(), &dest)?;
        }
    }
    Ok(())
}

fn summary_line(label: &str, t: &Trajectory) -> String {
    let prefix = if label.is_empty() { String::new() } else { format!("{label}: ") };
    format!(
        "{prefix}{} ({} queries, {} committed turns)",
        t.termination.kind,
        t.queries(),
        t.committed_turns()
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<i32, Failure> {
    let settings = Settings::resolve(args)?;
    let registry = match &settings.tools {
        Some(p) => ToolRegistry::load(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => ToolRegistry::default_inventory(),
    }
    .with_permissive(settings.permissive);
    let factory = BackendFactory::new(&settings)?;

    match args.parallel {
        0 => Err(Failure::Usage("--parallel must be at least 1".into())),
        1 => {
            let agent = Agent::new(settings.agent.clone(), registry, settings.sandbox.clone()).map_err(agent_error)?;
            let inner = factory.make(0)?;
            let traj = match &args.record {
                Some(path) => {
                    let mut rec = RecordingBackend::create(inner, path)
                        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                    agent.run(&settings.task, &mut rec)
                }
                None => {
                    let mut b = inner;
                    agent.run(&settings.task, &mut *b)
                }
            }
            .map_err(agent_error)?;
            write_trajectory(args.out.as_deref(), &traj)?;
            eprintln!("{}", summary_line("", &traj));
            if !traj.termination.detail.is_empty() && traj.final_message().is_none() {
                eprintln!("{}", traj.termination.detail);
            }
            Ok(exit_code(traj.termination.kind))
        }
        n => {
            let out = args
                .out
                .as_deref()
                .ok_or_else(|| Failure::Usage("--parallel needs --out <directory>".into()))?;
            if args.record.is_some() {
                return Err(Failure::Usage("--record cannot be combined with --parallel".into()));
            }
            fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            let mut jobs = Vec::with_capacity(n);
            for k in 0..n {
                let root = out.join(format!("run-{k}"));
                if root.exists() {
                    return Err(Failure::Usage(format!("{} already exists", root.display())));
                }
                copy_tree(&settings.sandbox.workspace_root, &root)
                    .map_err(|e| Failure::Runtime(format!("copying workspace to {}: {e}", root.display())))?;
                let sandbox = SandboxConfig {
                    workspace_root: root,
                    ..settings.sandbox.clone()
                };
                let agent = Agent::new(settings.agent.clone(), registry.clone(), sandbox).map_err(agent_error)?;
                jobs.push((k, agent, factory.make(k as u64)?));
            }
            let results: Vec<(usize, Result<Trajectory, AgentError>)> = std::thread::scope(|s| {
                let handles: Vec<_> = jobs
                    .into_iter()
                    .map(|(k, agent, mut backend)| {
                        let task = &settings.task;
                        s.spawn(move || (k, agent.run(task, &mut *backend)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            });
            let mut code = 0;
            for (k, res) in results {
                let traj = res.map_err(agent_error)?;
                write_trajectory(Some(&out.join(format!("run-{k}.jsonl"))), &traj)?;
                eprintln!("{}", summary_line(&format!("run-{k}"), &traj));
                if code == 0 {
                    code = exit_code(traj.termination.kind);
                }
            }
            Ok(code)
        }
    }
}

fn write_trajectory(out: Option<&Path>, traj: &Trajectory) -> Result<(), Failure> {
    let text = traj.to_jsonl();
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}
