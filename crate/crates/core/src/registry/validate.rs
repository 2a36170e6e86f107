use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ParamKind, ToolSpec, ValueType};
use crate::exception::ExceptionKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Integer(u64),
    String(String),
}

impl ArgValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::String(s) => Some(s),
            ArgValue::Integer(_) => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            ArgValue::Integer(n) => Some(*n),
            ArgValue::String(_) => None,
        }
    }
}

/// A validated tool invocation. Every key in `args` is a canonical parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub spec: ToolSpec,
    pub args: BTreeMap<String, ArgValue>,
    pub raw: String,
}

impl ToolCall {
    pub fn str_arg(&self, name: &str) -> Option<&str> {
        self.args.get(name).and_then(ArgValue::as_str)
    }

    pub fn int_arg(&self, name: &str) -> Option<u64> {
        self.args.get(name).and_then(ArgValue::as_u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArgError {
    #[error("arguments are not valid JSON: {0}")]
    Json(String),
    #[error("arguments must be a JSON object")]
    NotObject,
    #[error("unknown argument `{0}`")]
    Unknown(String),
    #[error("argument `{param}` must be {expected}")]
    Type { param: String, expected: &'static str },
    #[error("argument `{canonical}` given twice (also as `{alias}`)")]
    Conflict { canonical: String, alias: String },
    #[error("missing required argument `{0}`")]
    MissingRequired(String),
}

impl ArgError {
    pub fn kind(&self) -> ExceptionKind {
        match self {
            ArgError::Unknown(_) => ExceptionKind::UnknownToolCallArg,
            _ => ExceptionKind::ToolCallArgParsingError,
        }
    }
}

fn coerce(param: &str, t: ValueType, v: &Value) -> Result<ArgValue, ArgError> {
    match (t, v) {
        (ValueType::String, Value::String(s)) => Ok(ArgValue::String(s.clone())),
        (ValueType::Integer, Value::Number(n)) if n.as_u64().is_some() => {
            Ok(ArgValue::Integer(n.as_u64().unwrap()))
        }
        (ValueType::String, _) => Err(ArgError::Type {
            param: param.to_string(),
            expected: "a string",
        }),
        (ValueType::Integer, _) => Err(ArgError::Type {
            param: param.to_string(),
            expected: "a non-negative integer",
        }),
    }
}

/// Checks run in order: JSON syntax, object shape, unknown keys, value types,
/// alias/canonical conflicts, required presence. `null` counts as absent.
pub(super) fn validate_args(spec: &ToolSpec, raw: &str, permissive: bool) -> Result<ToolCall, ArgError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| ArgError::Json(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(ArgError::NotObject);
    };

    if !permissive {
        if let Some(key) = map.keys().find(|k| spec.param(k).is_none()) {
            return Err(ArgError::Unknown(key.clone()));
        }
    }

    let mut args = BTreeMap::new();
    let mut sources: BTreeMap<String, String> = BTreeMap::new();
    for (key, v) in &map {
        let Some(param) = spec.param(key) else {
            continue;
        };
        if v.is_null() {
            continue;
        }
        let value = coerce(key, param.value_type, v)?;
        let canonical = match param.kind {
            ParamKind::Alias => param.alias_of.clone().expect("validated at registry build"),
            _ => param.name.clone(),
        };
        if let Some(prev) = sources.insert(canonical.clone(), key.clone()) {
            let alias = if prev == canonical { key.clone() } else { prev };
            return Err(ArgError::Conflict { canonical, alias });
        }
        args.insert(canonical, value);
    }

    if let Some(missing) = spec
        .params
        .iter()
        .find(|p| p.kind == ParamKind::Required && !args.contains_key(&p.name))
    {
        return Err(ArgError::MissingRequired(missing.name.clone()));
    }

    Ok(ToolCall {
        spec: spec.clone(),
        args,
        raw: raw.to_string(),
    })
}
