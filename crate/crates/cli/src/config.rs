//! Run settings resolved from flags, environment, config file and defaults,
//! in that order of precedence.

use std::path::{Path, PathBuf};
use std::time::Duration;

use harmony_agent::sandbox::{Isolation, SandboxConfig};
use harmony_agent::{AgentConfig, Task};
use serde::Deserialize;

use crate::args::RunArgs;
use crate::Failure;

pub const ENV_PREFIX: &str = "HARMONY_AGENT_";
pub const DEFAULT_MODEL: &str = "openai/gpt-oss-20b";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub script: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workspace: Option<PathBuf>,
    pub tools: Option<PathBuf>,
    #[serde(default)]
    pub permissive: bool,
    pub instructions: Option<String>,
    /// Any `AgentConfig` field; missing ones keep their defaults.
    #[serde(default)]
    pub agent: Option<toml::Table>,
    #[serde(default)]
    pub sandbox: SandboxSection,
    #[serde(default)]
    pub http: HttpSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxSection {
    pub timeout: Option<f64>,
    pub output_cap: Option<usize>,
    #[serde(default)]
    pub search_regex: bool,
    pub isolation: Option<Isolation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSection {
    pub request_timeout: Option<f64>,
    pub max_attempts: Option<u32>,
    /// Extra keys merged into every request body.
    pub extra_body: Option<serde_json::Map<String, serde_json::Value>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

pub enum BackendChoice {
    Live { endpoint: String, model: String, api_key: Option<String> },
    Script(PathBuf),
}

pub struct Settings {
    pub task: Task,
    pub agent: AgentConfig,
    pub sandbox: SandboxConfig,
    pub backend: BackendChoice,
    pub seed: Option<u64>,
    pub tools: Option<PathBuf>,
    pub permissive: bool,
    pub http: HttpSection,
}

fn env(name: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}{name}")).ok().filter(|v| !v.is_empty())
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    env(name)
        .map(|v| {
            v.parse()
                .map_err(|e| Failure::Usage(format!("{ENV_PREFIX}{name}={v}: {e}")))
        })
        .transpose()
}

fn seconds(v: f64, what: &str) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(v).map_err(|_| Failure::Usage(format!("{what} must be a non-negative number of seconds")))
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self, Failure> {
        let config_path = args.config.clone().or_else(|| env("CONFIG").map(PathBuf::from));
        let file = match &config_path {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };

        let mut agent: AgentConfig = match file.agent.clone() {
            Some(t) => t
                .try_into()
                .map_err(|e| Failure::Usage(format!("[agent] section: {e}")))?,
            None => AgentConfig::default(),
        };
        macro_rules! layer {
            ($field:ident, $flag:expr, $env:literal) => {
                if let Some(v) = $flag.or(env_parse($env)?) {
                    agent.$field = v;
                }
            };
        }
        layer!(reasoning_effort, args.reasoning, "REASONING");
        layer!(max_retries, args.max_retries, "MAX_RETRIES");
        layer!(step_limit, args.step_limit, "STEP_LIMIT");
        layer!(context_window, args.context_window, "CONTEXT_WINDOW");
        layer!(max_new_tokens, args.max_new_tokens, "MAX_NEW_TOKENS");
        layer!(temperature, args.temperature, "TEMPERATURE");
        layer!(top_p, args.top_p, "TOP_P");
        if let Some(v) = args.max_total_new_tokens.or(env_parse("MAX_TOTAL_NEW_TOKENS")?) {
            agent.max_total_new_tokens = Some(v);
        }
        agent.high_effort_overflow_retry |= args.overflow_restart;
        agent.retry_feedback |= args.retry_feedback;
        agent.validate().map_err(Failure::Usage)?;

        let workspace = args
            .workspace
            .clone()
            .or_else(|| env("WORKSPACE").map(PathBuf::from))
            .or(file.workspace.clone())
            .ok_or_else(|| Failure::Usage("no workspace given (--workspace)".into()))?;
        if !workspace.is_dir() {
            return Err(Failure::Usage(format!("workspace {} is not a directory", workspace.display())));
        }
        let mut sandbox = SandboxConfig::new(workspace);
        if let Some(t) = args.timeout.or(env_parse("TIMEOUT")?).or(file.sandbox.timeout) {
            sandbox.timeout = seconds(t, "timeout")?;
        }
        if let Some(c) = args.output_cap.or(env_parse("OUTPUT_CAP")?).or(file.sandbox.output_cap) {
            sandbox.output_cap = c;
        }
        sandbox.search_regex = file.sandbox.search_regex;
        if let Some(iso) = file.sandbox.isolation.clone() {
            sandbox.isolation = iso;
        }
        sandbox.validate().map_err(|e| Failure::Usage(e.to_string()))?;

        let task_text = match (&args.task, &args.task_file) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read task file {}: {e}", p.display())))?,
            (None, None) => return Err(Failure::Usage("no task given (--task or --task-file)".into())),
        };
        let mut task = Task::new(task_text.trim_end());
        if let Some(i) = args.instructions.clone().or(file.instructions.clone()) {
            task = task.with_instructions(i);
        }
        task.validate().map_err(Failure::Usage)?;

        // The first source (flags, then environment, then file) naming either
        // a script or an endpoint decides the backend.
        let levels = [
            (args.script.clone(), args.endpoint.clone()),
            (env("SCRIPT").map(PathBuf::from), env("ENDPOINT")),
            (file.script.clone(), file.endpoint.clone()),
        ];
        let backend = match levels.into_iter().find(|(s, e)| s.is_some() || e.is_some()) {
            Some((Some(_), Some(_))) => {
                return Err(Failure::Usage("both a script and an endpoint are set; choose one".into()))
            }
            Some((Some(path), None)) => {
                if !path.is_file() {
                    return Err(Failure::Usage(format!("script {} does not exist", path.display())));
                }
                BackendChoice::Script(path)
            }
            Some((None, Some(endpoint))) => BackendChoice::Live {
                endpoint,
                model: args
                    .model
                    .clone()
                    .or_else(|| env("MODEL"))
                    .or(file.model.clone())
                    .unwrap_or_else(|| DEFAULT_MODEL.into()),
                api_key: env("API_KEY").or(file.api_key.clone()),
            },
            _ => return Err(Failure::Usage("no backend: give --endpoint or --script".into())),
        };

        Ok(Settings {
            task,
            agent,
            sandbox,
            backend,
            seed: args.seed.or(env_parse("SEED")?).or(file.seed),
            tools: args.tools.clone().or(file.tools.clone()),
            permissive: args.permissive || file.permissive,
            http: file.http,
        })
    }
}
