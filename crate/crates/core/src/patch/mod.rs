//! The `apply_patch` envelope format: parsing, serialization, and atomic
//! application against a workspace directory.
//!
//! ```text
//! *** Begin Patch
//! *** Add File: hello.txt
//! +Hello, world!
//! *** Update File: src/lib.rs
//! *** Move to: src/core.rs
//! @@ fn main() {
//!      let x = 1;
//! -    println!("{}", x);
//! +    println!("x = {x}");
//! *** Delete File: old.txt
//! *** End Patch
//! ```
//!
//! The full grammar is documented in `docs/patch-format.md`.

mod apply;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use apply::{apply_patch, apply_patch_with, ApplyOptions, ApplyReport, FileStatus};
pub use parser::parse_patch;

pub const BEGIN_PATCH: &str = "*** Begin Patch";
pub const END_PATCH: &str = "*** End Patch";
pub const ADD_FILE: &str = "*** Add File: ";
pub const DELETE_FILE: &str = "*** Delete File: ";
pub const UPDATE_FILE: &str = "*** Update File: ";
pub const MOVE_TO: &str = "*** Move to: ";
pub const END_OF_FILE: &str = "*** End of File";
pub const HUNK_MARKER: &str = "@@";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub ops: Vec<FileOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FileOp {
    Add {
        path: String,
        lines: Vec<String>,
    },
    Delete {
        path: String,
    },
    Update {
        path: String,
        move_to: Option<String>,
        hunks: Vec<Hunk>,
    },
}

impl FileOp {
    pub fn path(&self) -> &str {
        match self {
            FileOp::Add { path, .. } | FileOp::Delete { path } | FileOp::Update { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    /// Text after `@@`, used to position the hunk after a matching line.
    pub anchor: Option<String>,
    pub lines: Vec<HunkLine>,
    /// The hunk must match at the end of the file.
    pub end_of_file: bool,
}

impl Hunk {
    /// Lines the hunk expects to find: context and deletions.
    pub fn old_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                HunkLine::Context(s) | HunkLine::Delete(s) => Some(s.as_str()),
                HunkLine::Insert(_) => None,
            })
            .collect()
    }

    /// Lines the hunk leaves behind: context and insertions.
    pub fn new_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                HunkLine::Context(s) | HunkLine::Insert(s) => Some(s.as_str()),
                HunkLine::Delete(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HunkLine {
    Context(String),
    Delete(String),
    Insert(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("invalid patch at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: {message}")]
    Apply { path: String, message: String },
    #[error(transparent)]
    Path(#[from] crate::sandbox::PathError),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{BEGIN_PATCH}")?;
        for op in &self.ops {
            match op {
                FileOp::Add { path, lines } => {
                    writeln!(f, "{ADD_FILE}{path}")?;
                    for l in lines {
                        writeln!(f, "+{l}")?;
                    }
                }
                FileOp::Delete { path } => writeln!(f, "{DELETE_FILE}{path}")?,
                FileOp::Update { path, move_to, hunks } => {
                    writeln!(f, "{UPDATE_FILE}{path}")?;
                    if let Some(dest) = move_to {
                        writeln!(f, "{MOVE_TO}{dest}")?;
                    }
                    for h in hunks {
                        match &h.anchor {
                            Some(a) => writeln!(f, "{HUNK_MARKER} {a}")?,
                            None => writeln!(f, "{HUNK_MARKER}")?,
                        }
                        for l in &h.lines {
                            match l {
                                HunkLine::Context(s) => writeln!(f, " {s}")?,
                                HunkLine::Delete(s) => writeln!(f, "-{s}")?,
                                HunkLine::Insert(s) => writeln!(f, "+{s}")?,
                            }
                        }
                        if h.end_of_file {
                            writeln!(f, "{END_OF_FILE}")?;
                        }
                    }
                }
            }
        }
        write!(f, "{END_PATCH}")
    }
}
