use std::collections::HashSet;
use std::fmt::Write as _;

use super::{ParamKind, RegistryError, ToolSpec, ValueType};

fn ts_type(t: ValueType) -> &'static str {
    match t {
        ValueType::String => "string",
        ValueType::Integer => "number",
    }
}

/// Renders tool declarations in the TypeScript-like namespace syntax the
/// model was trained on. Alias parameters are accepted at validation time but
/// are not declared here.
pub fn render_tool_defs(tools: &[ToolSpec]) -> Result<String, RegistryError> {
    if tools.is_empty() {
        return Err(RegistryError::Empty);
    }
    let mut seen = HashSet::new();
    for t in tools {
        if !seen.insert(t.qualified_name()) {
            return Err(RegistryError::Duplicate(t.qualified_name()));
        }
    }

    // Namespaces in order of first appearance.
    let mut namespaces: Vec<&str> = Vec::new();
    for t in tools {
        if !namespaces.contains(&t.namespace.as_str()) {
            namespaces.push(&t.namespace);
        }
    }

    let mut out = String::from("# Tools");
    for ns in namespaces {
        let label = if ns.is_empty() { "functions" } else { ns };
        let _ = write!(out, "\n\n## {label}\n\nnamespace {label} {{\n");
        for t in tools.iter().filter(|t| t.namespace == ns) {
            out.push('\n');
            if !t.description.is_empty() {
                let _ = writeln!(out, "// {}", t.description);
            }
            let _ = writeln!(out, "type {} = (_: {{", t.name);
            for p in t.params.iter().filter(|p| p.kind != ParamKind::Alias) {
                if let Some(desc) = &p.description {
                    let _ = writeln!(out, "// {desc}");
                }
                let opt = if p.kind == ParamKind::Optional { "?" } else { "" };
                let _ = writeln!(out, "{}{opt}: {},", p.name, ts_type(p.value_type));
            }
            out.push_str("}) => any;\n");
        }
        let _ = write!(out, "\n}} // namespace {label}");
    }
    Ok(out)
}
