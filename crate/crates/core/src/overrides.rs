//! Dotted-path edits on the JSON form of a [`Scenario`].

use serde_json::Value;
use thiserror::Error;

use crate::types::Scenario;

#[derive(Debug, Error)]
pub enum OverrideError {
    #[error("unknown parameter path `{0}`")]
    UnknownParameterPath(String),
    #[error("parameter path `{0}` does not address a numeric field")]
    NotNumeric(String),
    #[error("malformed override `{0}`, expected key=value")]
    Malformed(String),
    #[error("scenario no longer parses after overrides: {0}")]
    Invalid(#[from] serde_json::Error),
}

fn slot<'a>(doc: &'a mut Value, path: &str) -> Result<&'a mut Value, OverrideError> {
    let mut cur = doc;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| OverrideError::UnknownParameterPath(path.to_owned()))?;
    }
    Ok(cur)
}

/// Replaces the value at `path`, which must already exist in the document.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), OverrideError> {
    *slot(doc, path)? = value;
    Ok(())
}

/// Like [`set_path`] but only for fields that hold a number (or an unset
/// optional number).
pub fn set_numeric(doc: &mut Value, path: &str, value: f64) -> Result<(), OverrideError> {
    let target = slot(doc, path)?;
    if !(target.is_number() || target.is_null()) {
        return Err(OverrideError::NotNumeric(path.to_owned()));
    }
    *target = Value::from(value);
    Ok(())
}

/// Parses `key=value`; the value is read as JSON when it parses, otherwise
/// as a bare string.
pub fn parse_override(raw: &str) -> Result<(String, Value), OverrideError> {
    let (key, val) = raw
        .split_once('=')
        .filter(|(k, _)| !k.trim().is_empty())
        .ok_or_else(|| OverrideError::Malformed(raw.to_owned()))?;
    let val = val.trim();
    let parsed = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_owned()));
    Ok((key.trim().to_owned(), parsed))
}

pub fn apply_overrides(base: &Scenario, overrides: &[(String, Value)]) -> Result<Scenario, OverrideError> {
    let mut doc = serde_json::to_value(base)?;
    for (path, value) in overrides {
        set_path(&mut doc, path, value.clone())?;
    }
    Ok(serde_json::from_value(doc)?)
}
