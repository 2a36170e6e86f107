//! Workspace path confinement.

use std::io;
use std::path::{Component, Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("path escapes the workspace: {0}")]
    Escape(String),
    #[error("invalid path: {0}")]
    Invalid(String),
}

/// Canonical form of the workspace root.
pub fn canonical_root(root: &Path) -> io::Result<PathBuf> {
    root.canonicalize()
}

/// Resolves a model-supplied path against `root` (which must be canonical).
///
/// Relative paths are joined to the root; absolute paths are accepted only if
/// they already lie under it. `..` may not climb above the root, and the
/// deepest existing ancestor of the result must canonicalize to a location
/// inside the root, which rules out symlink escapes. The returned path is
/// lexically normalized but not canonicalized, so it may name a file that
/// does not exist yet.
pub fn resolve_in(root: &Path, user: &str) -> Result<PathBuf, PathError> {
    if user.contains('\0') {
        return Err(PathError::Invalid(user.escape_default().to_string()));
    }
    let raw = Path::new(if user.is_empty() { "." } else { user });
    let relative = if raw.is_absolute() {
        raw.strip_prefix(root)
            .map_err(|_| PathError::Escape(user.to_string()))?
    } else {
        raw
    };

    let mut normalized = PathBuf::new();
    for comp in relative.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                if !normalized.pop() {
                    return Err(PathError::Escape(user.to_string()));
                }
            }
            Component::Normal(part) => normalized.push(part),
            Component::RootDir | Component::Prefix(_) => {
                return Err(PathError::Escape(user.to_string()));
            }
        }
    }

    let full = root.join(&normalized);
    let mut probe = full.as_path();
    loop {
        match probe.canonicalize() {
            Ok(real) => {
                if !real.starts_with(root) {
                    return Err(PathError::Escape(user.to_string()));
                }
                break;
            }
            Err(_) => match probe.parent() {
                Some(parent) if parent.starts_with(root) => probe = parent,
                _ => return Err(PathError::Escape(user.to_string())),
            },
        }
    }
    Ok(full)
}

/// Path of `full` relative to `root`, using `/` separators; `.` for the root.
pub fn display_relative(root: &Path, full: &Path) -> String {
    match full.strip_prefix(root) {
        Ok(rel) if rel.as_os_str().is_empty() => ".".to_string(),
        Ok(rel) => rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/"),
        Err(_) => full.display().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confinement() {
        let dir = tempfile::tempdir().unwrap();
        let root = canonical_root(dir.path()).unwrap();
        std::fs::create_dir(root.join("src")).unwrap();

        assert_eq!(resolve_in(&root, "src/a.rs").unwrap(), root.join("src/a.rs"));
        assert_eq!(resolve_in(&root, "./src/../src/x").unwrap(), root.join("src/x"));
        assert_eq!(resolve_in(&root, "").unwrap(), root);
        assert_eq!(resolve_in(&root, ".").unwrap(), root);
        let abs = root.join("src").display().to_string();
        assert_eq!(resolve_in(&root, &abs).unwrap(), root.join("src"));

        for bad in ["..", "../x", "src/../../x", "/etc/passwd", "/", "a/../../.."] {
            assert!(matches!(resolve_in(&root, bad), Err(PathError::Escape(_))), "{bad}");
        }
        assert!(matches!(resolve_in(&root, "a\0b"), Err(PathError::Invalid(_))));
    }

    #[test]
    fn symlink_escape() {
        let dir = tempfile::tempdir().unwrap();
        let outside = tempfile::tempdir().unwrap();
        let root = canonical_root(dir.path()).unwrap();
        std::os::unix::fs::symlink(outside.path(), root.join("link")).unwrap();
        assert!(matches!(resolve_in(&root, "link"), Err(PathError::Escape(_))));
        assert!(matches!(resolve_in(&root, "link/new.txt"), Err(PathError::Escape(_))));
    }

    #[test]
    fn relative_display() {
        let root = Path::new("/w");
        assert_eq!(display_relative(root, Path::new("/w")), ".");
        assert_eq!(display_relative(root, Path::new("/w/a/b")), "a/b");
    }
}
