use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci_stream, BootstrapCI};
use super::StatsError;
use crate::agent::Trajectory;
use crate::codec::parse_completion;
use crate::registry::ToolRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Confirmed,
    LikelyAlias,
    Confabulated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Confirmed => "confirmed",
            Verdict::LikelyAlias => "likely alias",
            Verdict::Confabulated => "confabulated",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mention and call tallies for one tool name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolEvidence {
    /// Unqualified name, e.g. `read_file`.
    pub name: String,
    pub text_mentions: usize,
    pub text_n: usize,
    pub actual_calls: usize,
    pub is_alias: bool,
}

/// Never called: confabulated. Called under an alias name: likely alias.
/// Otherwise confirmed.
pub fn classify_verdict(ev: &ToolEvidence) -> Verdict {
    if ev.actual_calls == 0 {
        Verdict::Confabulated
    } else if ev.is_alias {
        Verdict::LikelyAlias
    } else {
        Verdict::Confirmed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossrefRow {
    pub evidence: ToolEvidence,
    pub mention_ci: BootstrapCI,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossrefOptions {
    pub namespace: String,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for CrossrefOptions {
    fn default() -> Self {
        CrossrefOptions {
            namespace: "repo_browser".into(),
            resamples: super::DEFAULT_RESAMPLES,
            level: super::DEFAULT_LEVEL,
            seed: 0,
        }
    }
}

fn mention_pattern(namespace: &str) -> Regex {
    Regex::new(&format!(r"\b{}\.([A-Za-z_][A-Za-z0-9_]*)", regex::escape(namespace))).expect("static pattern")
}

/// Distinct tool names mentioned in one text sample.
pub fn extract_mentions(text: &str, namespace: &str) -> BTreeSet<String> {
    mention_pattern(namespace)
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .collect()
}

/// Counts tool-call messages addressed to `namespace` across every query in
/// the trajectories, including failed attempts. Names are not alias-collapsed.
pub fn count_calls<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>, namespace: &str) -> BTreeMap<String, usize> {
    let prefix = format!("{namespace}.");
    let mut counts = BTreeMap::new();
    for traj in trajectories {
        for turn in traj.turns() {
            let Ok(msgs) = parse_completion(&turn.completion) else { continue };
            for m in msgs.iter().filter(|m| m.is_tool_call()) {
                if let Some(name) = m.recipient.as_deref().and_then(|r| r.strip_prefix(&prefix)) {
                    *counts.entry(name.to_string()).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Cross-references per-sample text mentions with observed calls.
///
/// Each tool is counted at most once per sample. Rows cover every tool that
/// was mentioned or called, sorted by mention count (descending) then name.
/// Tool `i` in name order draws its bootstrap from stream `i` of the seed.
pub fn prober_crossref(
    text_samples: &[String],
    call_logs: &[Trajectory],
    registry: &ToolRegistry,
    opts: &CrossrefOptions,
) -> Result<Vec<CrossrefRow>, StatsError> {
    if text_samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    let per_sample: Vec<BTreeSet<String>> = text_samples
        .iter()
        .map(|t| extract_mentions(t, &opts.namespace))
        .collect();
    let calls = count_calls(call_logs, &opts.namespace);
    let names: BTreeSet<&String> = per_sample.iter().flatten().chain(calls.keys()).collect();

    let mut rows = Vec::with_capacity(names.len());
    for (stream, name) in names.into_iter().enumerate() {
        let indicators: Vec<bool> = per_sample.iter().map(|s| s.contains(name)).collect();
        let evidence = ToolEvidence {
            name: name.clone(),
            text_mentions: indicators.iter().filter(|&&b| b).count(),
            text_n: indicators.len(),
            actual_calls: calls.get(name).copied().unwrap_or(0),
            is_alias: registry
                .resolve_tool(&format!("{}.{name}", opts.namespace))
                .is_ok_and(|r| r.via_alias),
        };
        let mention_ci = bootstrap_ci_stream(&indicators, opts.resamples, opts.level, opts.seed, stream as u64)?;
        rows.push(CrossrefRow {
            verdict: classify_verdict(&evidence),
            evidence,
            mention_ci,
        });
    }
    rows.sort_by(|a, b| {
        b.evidence
            .text_mentions
            .cmp(&a.evidence.text_mentions)
            .then_with(|| a.evidence.name.cmp(&b.evidence.name))
    });
    Ok(rows)
}
