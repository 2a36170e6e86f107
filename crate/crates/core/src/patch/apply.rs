use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FileOp, Hunk, Patch, PatchError};
use crate::sandbox::{canonical_root, display_relative, resolve_in};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FileStatus {
    Added,
    Modified,
    Deleted,
    Moved { from: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyReport {
    pub files_added: usize,
    pub files_modified: usize,
    pub files_deleted: usize,
    pub files: Vec<(String, FileStatus)>,
}

impl ApplyReport {
    /// Summary in the form returned to the model.
    pub fn summary(&self) -> String {
        let mut out = String::from("Success. Updated the following files:");
        for (path, status) in &self.files {
            let tag = match status {
                FileStatus::Added => "A",
                FileStatus::Modified | FileStatus::Moved { .. } => "M",
                FileStatus::Deleted => "D",
            };
            out.push_str(&format!("\n{tag} {path}"));
        }
        out
    }
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ApplyOptions {
    /// Fault injection: fail the commit phase after this many file writes.
    pub fail_commit_after: Option<usize>,
}

/// Applies `patch` under `root`. Either every operation takes effect or the
/// workspace is left byte-for-byte unchanged.
pub fn apply_patch(patch: &Patch, root: &Path) -> Result<ApplyReport, PatchError> {
    apply_patch_with(patch, root, ApplyOptions::default())
}

#[doc(hidden)]
pub fn apply_patch_with(patch: &Patch, root: &Path, opts: ApplyOptions) -> Result<ApplyReport, PatchError> {
    let root = canonical_root(root).map_err(|e| io_err(root, e))?;
    let mut plan = Plan::new(&root);
    let mut report = ApplyReport::default();

    for op in &patch.ops {
        match op {
            FileOp::Add { path, lines } => {
                let full = resolve_in(&root, path)?;
                if plan.current(&full)?.is_some() || full.is_dir() {
                    return Err(apply_err(&root, &full, "file already exists"));
                }
                let mut content = lines.join("\n");
                if !lines.is_empty() {
                    content.push('\n');
                }
                plan.set(full.clone(), Some(content.into_bytes()));
                report.files_added += 1;
                report.files.push((display_relative(&root, &full), FileStatus::Added));
            }
            FileOp::Delete { path } => {
                let full = resolve_in(&root, path)?;
                if plan.current(&full)?.is_none() {
                    return Err(apply_err(&root, &full, "file does not exist"));
                }
                plan.set(full.clone(), None);
                report.files_deleted += 1;
                report.files.push((display_relative(&root, &full), FileStatus::Deleted));
            }
            FileOp::Update { path, move_to, hunks } => {
                let full = resolve_in(&root, path)?;
                let Some(bytes) = plan.current(&full)? else {
                    return Err(apply_err(&root, &full, "file does not exist"));
                };
                let text = String::from_utf8(bytes)
                    .map_err(|_| apply_err(&root, &full, "file is not valid UTF-8"))?;
                let updated = apply_hunks(&text, hunks)
                    .map_err(|msg| apply_err(&root, &full, &msg))?;
                match move_to {
                    Some(dest) => {
                        let dest_full = resolve_in(&root, dest)?;
                        if dest_full != full && (plan.current(&dest_full)?.is_some() || dest_full.is_dir()) {
                            return Err(apply_err(&root, &dest_full, "move destination already exists"));
                        }
                        plan.set(full.clone(), None);
                        plan.set(dest_full.clone(), Some(updated.into_bytes()));
                        report.files.push((
                            display_relative(&root, &dest_full),
                            FileStatus::Moved {
                                from: display_relative(&root, &full),
                            },
                        ));
                    }
                    None => {
                        plan.set(full.clone(), Some(updated.into_bytes()));
                        report.files.push((display_relative(&root, &full), FileStatus::Modified));
                    }
                }
                report.files_modified += 1;
            }
        }
    }

    plan.commit(opts)?;
    Ok(report)
}

fn apply_err(root: &Path, path: &Path, message: &str) -> PatchError {
    PatchError::Apply {
        path: display_relative(root, path),
        message: message.to_string(),
    }
}

fn io_err(path: &Path, e: io::Error) -> PatchError {
    PatchError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Desired end state of every touched path, layered over the filesystem.
struct Plan<'a> {
    root: &'a Path,
    desired: BTreeMap<PathBuf, Option<Vec<u8>>>,
}

impl<'a> Plan<'a> {
    fn new(root: &'a Path) -> Self {
        Plan {
            root,
            desired: BTreeMap::new(),
        }
    }

    fn current(&self, path: &Path) -> Result<Option<Vec<u8>>, PatchError> {
        if let Some(state) = self.desired.get(path) {
            return Ok(state.clone());
        }
        read_existing(path).map_err(|e| apply_err(self.root, path, &e.to_string()))
    }

    fn set(&mut self, path: PathBuf, content: Option<Vec<u8>>) {
        self.desired.insert(path, content);
    }

    fn commit(self, opts: ApplyOptions) -> Result<(), PatchError> {
        let mut journal = Journal::default();
        let mut writes = 0usize;
        for (path, desired) in &self.desired {
            let original = match read_existing(path) {
                Ok(o) => o,
                Err(e) => return Err(journal.rollback(io_err(path, e))),
            };
            if original.as_deref() == desired.as_deref() {
                continue;
            }
            if opts.fail_commit_after == Some(writes) {
                let e = io::Error::other("injected commit failure");
                return Err(journal.rollback(io_err(path, e)));
            }
            journal.originals.push((path.clone(), original));
            let result = match desired {
                Some(bytes) => write_file(path, bytes, &mut journal.created_dirs),
                None => fs::remove_file(path),
            };
            if let Err(e) = result {
                return Err(journal.rollback(io_err(path, e)));
            }
            writes += 1;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Journal {
    originals: Vec<(PathBuf, Option<Vec<u8>>)>,
    created_dirs: Vec<PathBuf>,
}

impl Journal {
    /// Restores every journaled path and removes directories the commit created.
    fn rollback(self, err: PatchError) -> PatchError {
        for (path, original) in self.originals.into_iter().rev() {
            let _ = match original {
                Some(bytes) => fs::write(&path, bytes),
                None => fs::remove_file(&path).or_else(|e| {
                    if e.kind() == io::ErrorKind::NotFound {
                        Ok(())
                    } else {
                        Err(e)
                    }
                }),
            };
        }
        for dir in self.created_dirs.into_iter().rev() {
            let _ = fs::remove_dir(dir);
        }
        err
    }
}

fn read_existing(path: &Path) -> io::Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn write_file(path: &Path, bytes: &[u8], created_dirs: &mut Vec<PathBuf>) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        let mut missing = Vec::new();
        let mut probe = parent;
        while !probe.exists() {
            missing.push(probe.to_path_buf());
            match probe.parent() {
                Some(p) => probe = p,
                None => break,
            }
        }
        for dir in missing.into_iter().rev() {
            fs::create_dir(&dir)?;
            created_dirs.push(dir);
        }
    }
    let tmp = path.with_file_name(format!(
        ".{}.patch-tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Splits on LF. A trailing LF does not produce an empty final line.
fn split_lines(text: &str) -> (Vec<String>, bool) {
    if text.is_empty() {
        return (Vec::new(), false);
    }
    let trailing = text.ends_with('\n');
    let body = if trailing { &text[..text.len() - 1] } else { text };
    (body.split('\n').map(str::to_string).collect(), trailing)
}

fn find_unique<F>(lines: &[String], from: usize, pattern: &[&str], eof: bool, eq: F) -> Result<Option<usize>, usize>
where
    F: Fn(&str, &str) -> bool,
{
    if pattern.len() > lines.len() {
        return Ok(None);
    }
    let last = lines.len() - pattern.len();
    let candidates: Vec<usize> = if eof {
        (last >= from).then_some(last).into_iter().collect()
    } else {
        (from..=last).collect()
    };
    let hits: Vec<usize> = candidates
        .into_iter()
        .filter(|&p| pattern.iter().zip(&lines[p..]).all(|(a, b)| eq(b, a)))
        .collect();
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some(hits[0])),
        n => Err(n),
    }
}

/// Locates `pattern` at or after `from`: exact match first, then ignoring
/// trailing whitespace. A pattern that matches more than once is rejected.
fn locate(lines: &[String], from: usize, pattern: &[&str], eof: bool) -> Result<usize, String> {
    let exact = |a: &str, b: &str| a == b;
    let loose = |a: &str, b: &str| a.trim_end() == b.trim_end();
    for eq in [&exact as &dyn Fn(&str, &str) -> bool, &loose] {
        match find_unique(lines, from, pattern, eof, eq) {
            Ok(Some(p)) => return Ok(p),
            Ok(None) => continue,
            Err(n) => return Err(format!("context matches {n} locations")),
        }
    }
    Err("context not found".to_string())
}

fn apply_hunks(text: &str, hunks: &[Hunk]) -> Result<String, String> {
    let (mut lines, trailing) = split_lines(text);
    let was_empty = text.is_empty();
    let mut cursor = 0usize;

    for (idx, hunk) in hunks.iter().enumerate() {
        let label = |msg: String| format!("hunk {}: {msg}", idx + 1);
        let mut anchored = false;
        if let Some(anchor) = &hunk.anchor {
            let at = locate(&lines, cursor, &[anchor.as_str()], false)
                .map_err(|m| label(format!("anchor `{anchor}`: {m}")))?;
            cursor = at + 1;
            anchored = true;
        }
        let old = hunk.old_lines();
        let new: Vec<String> = hunk.new_lines().into_iter().map(str::to_string).collect();
        let at = if old.is_empty() {
            if hunk.end_of_file || !anchored {
                lines.len()
            } else {
                cursor
            }
        } else {
            locate(&lines, cursor, &old, hunk.end_of_file).map_err(label)?
        };
        let inserted = new.len();
        lines.splice(at..at + old.len(), new);
        cursor = at + inserted;
    }

    if lines.is_empty() {
        return Ok(String::new());
    }
    let mut out = lines.join("\n");
    if trailing || was_empty {
        out.push('\n');
    }
    Ok(out)
}
