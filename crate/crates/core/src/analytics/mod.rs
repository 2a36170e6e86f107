//! Offline statistics over logged samples and trajectories.

mod bootstrap;
mod evidence;
mod lift;
mod overhead;

use std::fmt::Write as _;

pub use bootstrap::{
    bootstrap_ci, bootstrap_ci_stream, indicator_samples, quantile_sorted, BootstrapCI, DEFAULT_LEVEL,
    DEFAULT_RESAMPLES,
};
pub use evidence::{
    classify_verdict, count_calls, extract_mentions, prober_crossref, CrossrefOptions, CrossrefRow, ToolEvidence,
    Verdict,
};
pub use lift::{call_rate_lift, Lift, LiftReport};
pub use overhead::{token_overhead, Histogram, OverheadReport, OverheadSummary, TurnTokenRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no samples")]
    EmptySamples,
    #[error("resample count must be positive")]
    ZeroResamples,
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("line {line}: {message}")]
    Input { line: usize, message: String },
}

/// Reads text samples: one per line, either a JSON string or an object with
/// a `text` field. Blank lines are skipped.
pub fn parse_text_samples(doc: &str) -> Result<Vec<String>, StatsError> {
    let mut out = Vec::new();
    for (i, line) in doc.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| StatsError::Input { line: i + 1, message };
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let text = match &value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Object(o) => match o.get("text") {
                Some(serde_json::Value::String(s)) => s.clone(),
                _ => return Err(err("object lacks a string `text` field".into())),
            },
            _ => return Err(err("expected a string or an object".into())),
        };
        out.push(text);
    }
    Ok(out)
}

/// Reads 0/1 outcomes, one per line (`0`, `1`, `true`, `false`).
pub fn parse_outcomes(doc: &str) -> Result<Vec<bool>, StatsError> {
    doc.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(StatsError::Input {
                line: i + 1,
                message: format!("expected 0 or 1, got `{other}`"),
            }),
        })
        .collect()
}

/// Table of tools, mention rates with intervals, call counts, and verdicts.
pub fn crossref_table(rows: &[CrossrefRow]) -> String {
    let mut out = String::new();
    let n = rows.first().map(|r| r.evidence.text_n).unwrap_or(0);
    let _ = writeln!(out, "{:<24} {:<26} {:>12}  Verdict", "Tool", "Text mentions [95% CI]", "Actual calls");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<24} {:<26} {:>12}  {}",
            r.evidence.name,
            r.mention_ci.display_percent(),
            r.evidence.actual_calls,
            r.verdict
        );
    }
    let _ = writeln!(out, "(n = {n} text samples)");
    out
}

pub fn crossref_csv(rows: &[CrossrefRow]) -> String {
    let mut out = String::from("tool,text_mentions,text_n,rate,ci_lo,ci_hi,actual_calls,is_alias,verdict\n");
    for r in rows {
        let e = &r.evidence;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.name,
            e.text_mentions,
            e.text_n,
            r.mention_ci.point,
            r.mention_ci.lo,
            r.mention_ci.hi,
            e.actual_calls,
            e.is_alias,
            r.verdict.as_str()
        );
    }
    out
}

pub fn overhead_table(per_run: &[(String, OverheadSummary)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:>6} {:>9} {:>14} {:>14} {:>7}",
        "Trajectory", "Turns", "Tooldef", "Harmony total", "Chat estimate", "Ratio"
    );
    let mut total = OverheadSummary::default();
    let row = |name: &str, s: &OverheadSummary, out: &mut String| {
        let ratio = s.ratio().map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<32} {:>6} {:>9} {:>14} {:>14} {:>7}",
            name, s.turns, s.tooldef_tokens, s.harmony_total, s.chat_total, ratio
        );
    };
    for (name, s) in per_run {
        row(name, s, &mut out);
        total = total.merge(s);
    }
    if per_run.len() > 1 {
        row("all", &total, &mut out);
    }
    out
}

pub fn lift_table(label: &str, r: &LiftReport) -> String {
    format!(
        "{:<16} {:<22} {:<22} {}\n{:<16} {:<22} {:<22} {}\n",
        "", "Baseline", "With tools", "Lift",
        label,
        r.baseline.display_percent(),
        r.with_tools.display_percent(),
        r.lift
    )
}
