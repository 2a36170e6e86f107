use std::path::PathBuf;

use harmony_agent::sandbox::{canonical_root, cap_output, resolve_in, PathError};
use proptest::prelude::*;

struct Fixture {
    _dir: tempfile::TempDir,
    _outside: tempfile::TempDir,
    root: PathBuf,
}

/// A root holding directories `a`, `a/b` and a symlink `out` pointing outside.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let outside = tempfile::tempdir().unwrap();
    let root = canonical_root(dir.path()).unwrap();
    std::fs::create_dir_all(root.join("a/b")).unwrap();
    std::os::unix::fs::symlink(outside.path(), root.join("out")).unwrap();
    Fixture {
        _dir: dir,
        _outside: outside,
        root,
    }
}

fn segment() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        3 => Just(".."),
        1 => Just("."),
        2 => Just("a"),
        2 => Just("b"),
        1 => Just("out"),
        1 => Just("new"),
        1 => Just(""),
    ]
}

/// Lexical walk: `None` means the path climbs above the root or ends up
/// inside the outward symlink.
fn expected(segments: &[&str]) -> Option<Vec<String>> {
    let mut stack: Vec<String> = Vec::new();
    for s in segments {
        match *s {
            "" | "." => {}
            ".." => {
                stack.pop()?;
            }
            other => stack.push(other.to_string()),
        }
    }
    if stack.first().map(String::as_str) == Some("out") {
        return None;
    }
    Some(stack)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn resolution_never_leaves_the_root(segs in prop::collection::vec(segment(), 0..8), absolute in any::<bool>()) {
        let fx = fixture();
        let rel = segs.join("/");
        let user = if absolute { format!("{}/{rel}", fx.root.display()) } else { rel.clone() };
        // A leading empty segment makes the relative form an absolute path
        // outside the root.
        let want = if !absolute && rel.starts_with('/') { None } else { expected(&segs) };
        match (resolve_in(&fx.root, &user), want) {
            (Ok(p), Some(stack)) => {
                let want = stack.iter().fold(fx.root.clone(), |acc, s| acc.join(s));
                prop_assert_eq!(&p, &want);
                prop_assert!(p.starts_with(&fx.root));
            }
            (Err(PathError::Escape(_)), None) => {}
            (got, want) => prop_assert!(false, "{user:?}: got {got:?}, expected {want:?}"),
        }
    }

    #[test]
    fn foreign_absolute_paths_escape(tail in "[a-z]{1,8}(/[a-z]{1,8}){0,3}") {
        let fx = fixture();
        for prefix in ["/", "/tmp/", "/etc/"] {
            let p = format!("{prefix}{tail}");
            prop_assert!(matches!(resolve_in(&fx.root, &p), Err(PathError::Escape(_))));
        }
    }

    #[test]
    fn capped_output_is_a_prefix(s in any::<String>(), cap in 1usize..64) {
        let out = cap_output(s.clone(), cap);
        if s.len() <= cap {
            prop_assert_eq!(out, s);
        } else {
            let (kept, marker) = out.rsplit_once("\n[output truncated at ").unwrap();
            prop_assert!(kept.len() <= cap);
            prop_assert!(s.starts_with(kept));
            prop_assert_eq!(marker, format!("{} bytes]", kept.len()));
        }
    }
}
