use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use harmony_agent::analytics::{
    bootstrap_ci, call_rate_lift, crossref_csv, crossref_table, lift_table, overhead_table, parse_outcomes,
    parse_text_samples, prober_crossref, token_overhead, CrossrefOptions, Histogram, OverheadReport,
    OverheadSummary, StatsError,
};
use harmony_agent::{ToolRegistry, Trajectory};
use serde_json::json;

use crate::args::{BootstrapArgs, Format, ReportArgs, StatsCommand};
use crate::{load_trajectory, Failure};

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn input_error(path: &Path, e: StatsError) -> Failure {
    match e {
        StatsError::Input { line, message } => Failure::Runtime(format!("{}:{line}: {message}", path.display())),
        StatsError::EmptySamples => Failure::Usage(format!("{} contains no samples", path.display())),
        other => Failure::Usage(other.to_string()),
    }
}

fn emit(report: &ReportArgs, body: String) -> Result<(), Failure> {
    match &report.out {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn opts_check(b: &BootstrapArgs) -> Result<(), Failure> {
    if b.resamples == 0 {
        return Err(Failure::Usage("--resamples must be positive".into()));
    }
    if !(b.level > 0.0 && b.level < 1.0) {
        return Err(Failure::Usage("--level must lie strictly between 0 and 1".into()));
    }
    Ok(())
}

pub fn cmd_stats(cmd: &StatsCommand) -> Result<i32, Failure> {
    match cmd {
        StatsCommand::Overhead {
            trajectories,
            histogram,
            bins,
            report,
        } => overhead(trajectories, histogram.as_deref(), *bins, report),
        StatsCommand::Crossref {
            text,
            calls,
            namespace,
            tools,
            bootstrap,
            report,
        } => {
            opts_check(bootstrap)?;
            let samples = parse_text_samples(&read(text)?).map_err(|e| input_error(text, e))?;
            let logs = calls.iter().map(|p| load_trajectory(p)).collect::<Result<Vec<_>, _>>()?;
            let registry = match tools {
                Some(p) => ToolRegistry::load(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
                None => ToolRegistry::default_inventory(),
            };
            let opts = CrossrefOptions {
                namespace: namespace.clone(),
                resamples: bootstrap.resamples,
                level: bootstrap.level,
                seed: bootstrap.seed,
            };
            let rows = prober_crossref(&samples, &logs, &registry, &opts).map_err(|e| input_error(text, e))?;
            let body = match report.format {
                Format::Text => crossref_table(&rows),
                Format::Json => pretty(&rows),
                Format::Csv => crossref_csv(&rows),
            };
            emit(report, body)?;
            Ok(0)
        }
        StatsCommand::Lift {
            baseline,
            with_tools,
            label,
            bootstrap,
            report,
        } => {
            opts_check(bootstrap)?;
            let b = parse_outcomes(&read(baseline)?).map_err(|e| input_error(baseline, e))?;
            let w = parse_outcomes(&read(with_tools)?).map_err(|e| input_error(with_tools, e))?;
            if b.is_empty() {
                return Err(input_error(baseline, StatsError::EmptySamples));
            }
            if w.is_empty() {
                return Err(input_error(with_tools, StatsError::EmptySamples));
            }
            let r = call_rate_lift(&b, &w, bootstrap.resamples, bootstrap.level, bootstrap.seed)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let body = match report.format {
                Format::Text => lift_table(label, &r),
                Format::Json => pretty(&json!({ "label": label, "report": r })),
                Format::Csv => format!(
                    "label,baseline,baseline_lo,baseline_hi,with_tools,with_tools_lo,with_tools_hi,lift\n{},{},{},{},{},{},{},{}\n",
                    label,
                    r.baseline.point,
                    r.baseline.lo,
                    r.baseline.hi,
                    r.with_tools.point,
                    r.with_tools.lo,
                    r.with_tools.hi,
                    r.lift.ratio().map(|x| x.to_string()).unwrap_or_else(|| "inf".into())
                ),
            };
            emit(report, body)?;
            Ok(0)
        }
        StatsCommand::Ci {
            outcomes,
            bootstrap,
            report,
        } => {
            opts_check(bootstrap)?;
            let xs = parse_outcomes(&read(outcomes)?).map_err(|e| input_error(outcomes, e))?;
            let ci = bootstrap_ci(&xs, bootstrap.resamples, bootstrap.level, bootstrap.seed)
                .map_err(|e| input_error(outcomes, e))?;
            let body = match report.format {
                Format::Text => format!("{} (n = {})\n", ci.display_percent(), ci.n),
                Format::Json => pretty(&ci),
                Format::Csv => format!("n,point,lo,hi,level,resamples,seed\n{},{},{},{},{},{},{}\n", ci.n, ci.point, ci.lo, ci.hi, ci.level, ci.resamples, ci.seed),
            };
            emit(report, body)?;
            Ok(0)
        }
    }
}

fn overhead(paths: &[PathBuf], histogram: Option<&Path>, bins: usize, report: &ReportArgs) -> Result<i32, Failure> {
    if paths.is_empty() {
        return Err(Failure::Usage("no trajectories given".into()));
    }
    let runs: Vec<(String, OverheadReport)> = paths
        .iter()
        .map(|p| {
            let t: Trajectory = load_trajectory(p)?;
            Ok((p.display().to_string(), token_overhead(&t, t.header.tooldef_tokens)))
        })
        .collect::<Result<_, Failure>>()?;
    let total = runs
        .iter()
        .fold(OverheadSummary::default(), |acc, (_, r)| acc.merge(&r.summary));

    if let Some(h) = histogram {
        let harmony: Vec<u64> = runs.iter().flat_map(|(_, r)| r.records.iter().map(|x| x.harmony_tokens)).collect();
        let chat: Vec<u64> = runs.iter().flat_map(|(_, r)| r.records.iter().map(|x| x.chat_tokens)).collect();
        fs::write(h, Histogram::build(&harmony, &chat, bins).to_csv())
            .map_err(|e| Failure::Runtime(format!("{}: {e}", h.display())))?;
    }

    let body = match report.format {
        Format::Text => {
            let rows: Vec<(String, OverheadSummary)> = runs.iter().map(|(n, r)| (n.clone(), r.summary)).collect();
            overhead_table(&rows)
        }
        Format::Json => pretty(&json!({
            "runs": runs.iter().map(|(n, r)| json!({ "trajectory": n, "report": r })).collect::<Vec<_>>(),
            "total": total,
        })),
        Format::Csv => {
            let mut out = String::from("trajectory,index,harmony_tokens,tooldef_tokens,chat_tokens\n");
            for (name, r) in &runs {
                for x in &r.records {
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{}",
                        x.index, x.harmony_tokens, x.tooldef_tokens, x.chat_tokens
                    );
                }
            }
            out
        }
    };
    emit(report, body)?;
    Ok(0)
}
