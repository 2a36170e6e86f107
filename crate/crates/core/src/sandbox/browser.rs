//! Native implementations of the read-only `repo_browser` tools.
//!
//! Output formats are canonical to this harness (the model's training
//! formats are not public) and documented in `docs/tools.md`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{canonical_root, display_relative, resolve_in, SandboxConfig, ToolError};

/// Directory names never listed or searched.
pub const SKIPPED_DIRS: [&str; 1] = [".git"];

fn resolve_existing(cfg: &SandboxConfig, path: &str) -> Result<(PathBuf, PathBuf), ToolError> {
    let root = canonical_root(&cfg.workspace_root).map_err(|e| ToolError::Io(e.to_string()))?;
    let full = resolve_in(&root, path)?;
    if fs::symlink_metadata(&full).is_err() {
        return Err(ToolError::NotFound(path.to_string()));
    }
    Ok((root, full))
}

/// Sorted directory entries, minus skipped names.
fn sorted_entries(dir: &Path) -> Result<Vec<(String, PathBuf, bool)>, ToolError> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| ToolError::Io(e.to_string()))? {
        let entry = entry.map_err(|e| ToolError::Io(e.to_string()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if SKIPPED_DIRS.contains(&name.as_str()) {
            continue;
        }
        let is_dir = entry.file_type().map(|t| t.is_dir()).unwrap_or(false);
        entries.push((name, entry.path(), is_dir));
    }
    entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
    Ok(entries)
}

/// Depth-limited tree listing.
///
/// The first line is the requested path (`./` for the root); each entry
/// below is indented two spaces per level. Directories end in `/`. Symlinks
/// are listed but not followed. `depth = None` means unlimited and
/// `Some(0)` lists the root only.
pub fn print_tree(path: &str, depth: Option<u64>, cfg: &SandboxConfig) -> Result<String, ToolError> {
    let (root, full) = resolve_existing(cfg, path)?;
    let is_dir = fs::symlink_metadata(&full).map(|m| m.is_dir()).unwrap_or(false);
    let mut out = display_relative(&root, &full);
    if is_dir {
        out.push('/');
    }
    out.push('\n');
    if is_dir {
        walk_tree(&full, 1, depth, &mut out)?;
    }
    Ok(out)
}

fn walk_tree(dir: &Path, level: u64, max: Option<u64>, out: &mut String) -> Result<(), ToolError> {
    if max.is_some_and(|m| level > m) {
        return Ok(());
    }
    for (name, path, is_dir) in sorted_entries(dir)? {
        for _ in 0..level {
            out.push_str("  ");
        }
        out.push_str(&name);
        if is_dir {
            out.push('/');
        }
        out.push('\n');
        if is_dir {
            walk_tree(&path, level + 1, max, out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    /// Workspace-relative path with `/` separators.
    pub file: String,
    /// 1-indexed.
    pub line: usize,
    pub text: String,
}

enum Matcher {
    Literal(String),
    Regex(regex::Regex),
}

impl Matcher {
    fn is_match(&self, line: &str) -> bool {
        match self {
            Matcher::Literal(q) => line.contains(q.as_str()),
            Matcher::Regex(r) => r.is_match(line),
        }
    }
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), ToolError> {
    for (_, p, is_dir) in sorted_entries(path)? {
        if is_dir {
            collect_files(&p, out)?;
        } else if p.is_file() {
            out.push(p);
        }
    }
    Ok(())
}

/// Finds lines containing `query` under `path`.
///
/// Files are visited in byte-wise order of their relative path; binary files
/// (a NUL byte) and non-UTF-8 files are skipped. `max_results` caps the hit
/// count. The query is a literal substring unless the sandbox enables regex
/// search.
pub fn search(
    path: &str,
    query: &str,
    max_results: Option<u64>,
    cfg: &SandboxConfig,
) -> Result<Vec<SearchHit>, ToolError> {
    if query.is_empty() {
        return Err(ToolError::InvalidQuery("query is empty".into()));
    }
    let matcher = if cfg.search_regex {
        Matcher::Regex(regex::Regex::new(query).map_err(|e| ToolError::InvalidQuery(e.to_string()))?)
    } else {
        Matcher::Literal(query.to_string())
    };
    let (root, full) = resolve_existing(cfg, path)?;

    let mut files = Vec::new();
    if full.is_dir() {
        collect_files(&full, &mut files)?;
    } else {
        files.push(full);
    }
    let mut files: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|p| (display_relative(&root, &p), p))
        .collect();
    files.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));

    let limit = max_results.map(|m| m as usize).unwrap_or(usize::MAX);
    let mut hits = Vec::new();
    if limit == 0 {
        return Ok(hits);
    }
    for (rel, p) in files {
        let Ok(bytes) = fs::read(&p) else { continue };
        if bytes.contains(&0) {
            continue;
        }
        let Ok(text) = String::from_utf8(bytes) else { continue };
        for (i, line) in text.split('\n').enumerate() {
            if matcher.is_match(line) {
                hits.push(SearchHit {
                    file: rel.clone(),
                    line: i + 1,
                    text: line.to_string(),
                });
                if hits.len() >= limit {
                    return Ok(hits);
                }
            }
        }
    }
    Ok(hits)
}

/// Renders hits as `file:line: text`, one per line.
pub fn render_hits(hits: &[SearchHit]) -> String {
    if hits.is_empty() {
        return "No matches found.".to_string();
    }
    hits.iter()
        .map(|h| format!("{}:{}: {}", h.file, h.line, h.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Returns lines `[line_start, line_end]` (1-indexed, inclusive) as
/// `{number}\t{text}` lines. Missing bounds default to the whole file and
/// out-of-range bounds clamp; an empty range yields an empty string.
pub fn open_file(
    path: &str,
    line_start: Option<u64>,
    line_end: Option<u64>,
    cfg: &SandboxConfig,
) -> Result<String, ToolError> {
    let (_, full) = resolve_existing(cfg, path)?;
    if !full.is_file() {
        return Err(ToolError::NotAFile(path.to_string()));
    }
    let bytes = fs::read(&full).map_err(|e| ToolError::Io(e.to_string()))?;
    let text = String::from_utf8_lossy(&bytes);
    let body = text.strip_suffix('\n').unwrap_or(&text);
    let lines: Vec<&str> = if text.is_empty() { Vec::new() } else { body.split('\n').collect() };

    let start = line_start.unwrap_or(1).max(1) as usize;
    let end = (line_end.unwrap_or(u64::MAX) as usize).min(lines.len());
    if start > end {
        return Ok(String::new());
    }
    Ok(lines[start - 1..end]
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{}\t{l}", start + i))
        .collect::<Vec<_>>()
        .join("\n"))
}
