use super::{
    FileOp, Hunk, HunkLine, Patch, PatchError, ADD_FILE, BEGIN_PATCH, DELETE_FILE, END_OF_FILE,
    END_PATCH, HUNK_MARKER, MOVE_TO, UPDATE_FILE,
};

fn syntax(line: usize, message: impl Into<String>) -> PatchError {
    PatchError::Syntax {
        line: line + 1,
        message: message.into(),
    }
}

fn header_path(line: usize, rest: &str) -> Result<String, PatchError> {
    let path = rest.trim();
    if path.is_empty() {
        return Err(syntax(line, "operation header has an empty path"));
    }
    Ok(path.to_string())
}

/// Parses an envelope into its file operations.
pub fn parse_patch(text: &str) -> Result<Patch, PatchError> {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut i = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| syntax(0, format!("missing `{BEGIN_PATCH}`")))?;
    if lines[i].trim() != BEGIN_PATCH {
        return Err(syntax(i, format!("expected `{BEGIN_PATCH}`")));
    }
    i += 1;

    let mut ops = Vec::new();
    loop {
        let Some(&line) = lines.get(i) else {
            return Err(syntax(i.saturating_sub(1), format!("missing `{END_PATCH}`")));
        };
        let trimmed = line.trim_end();
        if trimmed.trim_start() == END_PATCH {
            if let Some(extra) = lines[i + 1..].iter().position(|l| !l.trim().is_empty()) {
                return Err(syntax(i + 1 + extra, format!("content after `{END_PATCH}`")));
            }
            break;
        }
        if trimmed.is_empty() {
            i += 1;
            continue;
        }

        if let Some(rest) = line.strip_prefix(ADD_FILE) {
            let path = header_path(i, rest)?;
            i += 1;
            let mut content = Vec::new();
            while let Some(&l) = lines.get(i) {
                if let Some(body) = l.strip_prefix('+') {
                    content.push(body.to_string());
                    i += 1;
                } else if l.starts_with("***") {
                    break;
                } else {
                    return Err(syntax(i, "added file lines must start with `+`"));
                }
            }
            ops.push(FileOp::Add { path, lines: content });
        } else if let Some(rest) = line.strip_prefix(DELETE_FILE) {
            ops.push(FileOp::Delete {
                path: header_path(i, rest)?,
            });
            i += 1;
        } else if let Some(rest) = line.strip_prefix(UPDATE_FILE) {
            let path = header_path(i, rest)?;
            i += 1;
            let mut move_to = None;
            if let Some(rest) = lines.get(i).and_then(|l| l.strip_prefix(MOVE_TO)) {
                move_to = Some(header_path(i, rest)?);
                i += 1;
            }
            let (hunks, next) = parse_hunks(&lines, i)?;
            i = next;
            if hunks.is_empty() && move_to.is_none() {
                return Err(syntax(i.saturating_sub(1), format!("update of `{path}` has no hunks")));
            }
            ops.push(FileOp::Update { path, move_to, hunks });
        } else {
            return Err(syntax(i, format!("unknown operation header `{trimmed}`")));
        }
    }

    if ops.is_empty() {
        return Err(syntax(i, "patch contains no operations"));
    }
    Ok(Patch { ops })
}

fn parse_hunks(lines: &[&str], mut i: usize) -> Result<(Vec<Hunk>, usize), PatchError> {
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut current: Option<(usize, Hunk)> = None;

    fn finish(hunks: &mut Vec<Hunk>, current: &mut Option<(usize, Hunk)>) -> Result<(), PatchError> {
        if let Some((start, h)) = current.take() {
            if h.lines.is_empty() {
                return Err(syntax(start, "hunk has no lines"));
            }
            hunks.push(h);
        }
        Ok(())
    }

    while let Some(&line) = lines.get(i) {
        if line.trim_end() == END_OF_FILE {
            match current.as_mut() {
                Some((_, h)) => h.end_of_file = true,
                None => return Err(syntax(i, format!("`{END_OF_FILE}` outside a hunk"))),
            }
            finish(&mut hunks, &mut current)?;
            i += 1;
            continue;
        }
        if line.starts_with("***") {
            break;
        }
        if let Some(rest) = line.strip_prefix(HUNK_MARKER) {
            finish(&mut hunks, &mut current)?;
            let anchor = rest.trim();
            let anchor = (!anchor.is_empty()).then(|| anchor.to_string());
            current = Some((
                i,
                Hunk {
                    anchor,
                    lines: Vec::new(),
                    end_of_file: false,
                },
            ));
            i += 1;
            continue;
        }
        let parsed = match line.chars().next() {
            Some(' ') => HunkLine::Context(line[1..].to_string()),
            Some('-') => HunkLine::Delete(line[1..].to_string()),
            Some('+') => HunkLine::Insert(line[1..].to_string()),
            None => HunkLine::Context(String::new()),
            Some(_) => return Err(syntax(i, format!("unexpected line in hunk `{line}`"))),
        };
        // The first hunk may omit its `@@` line.
        let (_, hunk) = current.get_or_insert_with(|| {
            (
                i,
                Hunk {
                    anchor: None,
                    lines: Vec::new(),
                    end_of_file: false,
                },
            )
        });
        hunk.lines.push(parsed);
        i += 1;
    }
    finish(&mut hunks, &mut current)?;
    Ok((hunks, i))
}
