//! Tool inventory: canonical schemas, alias collapse, and argument validation.

mod render;
mod validate;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use render::render_tool_defs;
pub use validate::{ArgError, ArgValue, ToolCall};

use crate::exception::ExceptionKind;

const DEFAULT_INVENTORY: &str = include_str!("default_tools.toml");

/// Where the tool-definition block is embedded in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    #[default]
    System,
    Developer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    String,
    /// Non-negative integer.
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Required,
    Optional,
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    pub kind: ParamKind,
    /// Canonical parameter an alias normalizes to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    /// Empty for a tool without a namespace.
    #[serde(default)]
    pub namespace: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl ToolSpec {
    pub fn qualified_name(&self) -> String {
        qualify(&self.namespace, &self.name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Required and optional parameters, in declaration order.
    pub fn canonical_params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| p.kind != ParamKind::Alias)
    }
}

fn qualify(namespace: &str, name: &str) -> String {
    if namespace.is_empty() {
        name.to_string()
    } else {
        format!("{namespace}.{name}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("tool inventory is empty")]
    Empty,
    #[error("duplicate tool name `{0}`")]
    Duplicate(String),
    #[error("invalid tool `{tool}`: {reason}")]
    InvalidSpec { tool: String, reason: String },
    #[error("cannot load tool inventory: {0}")]
    Load(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
}

impl RegistryError {
    /// Only resolution failures reach the agent loop.
    pub fn kind(&self) -> Option<ExceptionKind> {
        match self {
            RegistryError::UnknownTool(_) => Some(ExceptionKind::UnknownToolCalled),
            _ => None,
        }
    }
}

/// Result of resolving a recipient against the registry.
#[derive(Debug, Clone, Copy)]
pub struct Resolution<'a> {
    pub spec: &'a ToolSpec,
    /// True when the recipient named an alias rather than the canonical tool.
    pub via_alias: bool,
}

#[derive(Debug, Deserialize)]
struct InventoryDoc {
    #[serde(default)]
    tools: Vec<ToolSpec>,
}

/// Immutable tool inventory.
#[derive(Debug, Clone)]
pub struct ToolRegistry {
    specs: Vec<ToolSpec>,
    index: HashMap<String, (usize, bool)>,
    permissive: bool,
}

impl ToolRegistry {
    pub fn new(specs: Vec<ToolSpec>) -> Result<Self, RegistryError> {
        let mut index = HashMap::new();
        for (i, spec) in specs.iter().enumerate() {
            validate_spec(spec)?;
            let names = std::iter::once((spec.name.as_str(), false))
                .chain(spec.aliases.iter().map(|a| (a.as_str(), true)));
            for (name, via_alias) in names {
                let qualified = qualify(&spec.namespace, name);
                if index.insert(qualified.clone(), (i, via_alias)).is_some() {
                    return Err(RegistryError::Duplicate(qualified));
                }
            }
        }
        Ok(ToolRegistry {
            specs,
            index,
            permissive: false,
        })
    }

    /// The shipped in-distribution inventory.
    pub fn default_inventory() -> Self {
        Self::from_toml_str(DEFAULT_INVENTORY).expect("shipped inventory is valid")
    }

    pub fn from_toml_str(doc: &str) -> Result<Self, RegistryError> {
        let doc: InventoryDoc = toml::from_str(doc).map_err(|e| RegistryError::Load(e.to_string()))?;
        Self::new(doc.tools)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Permissive mode drops unknown arguments instead of rejecting the call.
    pub fn with_permissive(mut self, permissive: bool) -> Self {
        self.permissive = permissive;
        self
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    pub fn specs(&self) -> &[ToolSpec] {
        &self.specs
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Resolves a qualified recipient to its canonical spec, collapsing aliases.
    pub fn resolve_tool(&self, recipient: &str) -> Result<Resolution<'_>, RegistryError> {
        self.index
            .get(recipient)
            .map(|&(i, via_alias)| Resolution {
                spec: &self.specs[i],
                via_alias,
            })
            .ok_or_else(|| RegistryError::UnknownTool(recipient.to_string()))
    }

    /// Parses and validates `raw` JSON arguments for `spec`.
    pub fn validate_args(&self, spec: &ToolSpec, raw: &str) -> Result<ToolCall, ArgError> {
        validate::validate_args(spec, raw, self.permissive)
    }
}

fn validate_spec(spec: &ToolSpec) -> Result<(), RegistryError> {
    let invalid = |reason: String| RegistryError::InvalidSpec {
        tool: spec.qualified_name(),
        reason,
    };
    if !crate::codec::is_qualified_name(&spec.qualified_name()) {
        return Err(invalid("name is not a qualified identifier".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for p in &spec.params {
        if !seen.insert(p.name.as_str()) {
            return Err(invalid(format!("duplicate parameter `{}`", p.name)));
        }
        match (&p.kind, &p.alias_of) {
            (ParamKind::Alias, Some(target)) => {
                let canon = spec
                    .params
                    .iter()
                    .find(|q| &q.name == target && q.kind != ParamKind::Alias)
                    .ok_or_else(|| invalid(format!("alias `{}` targets unknown `{target}`", p.name)))?;
                if canon.value_type != p.value_type {
                    return Err(invalid(format!("alias `{}` type differs from `{target}`", p.name)));
                }
            }
            (ParamKind::Alias, None) => {
                return Err(invalid(format!("alias `{}` has no alias_of", p.name)));
            }
            (_, Some(_)) => {
                return Err(invalid(format!("`{}` is not an alias but has alias_of", p.name)));
            }
            _ => {}
        }
    }
    Ok(())
}
