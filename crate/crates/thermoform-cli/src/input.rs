//! Input loading: one self-describing JSON file per run, addressed with
//! JSON pointers so schema errors name the offending location.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::errors::CliError;

pub fn load(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("`{}` is not valid JSON: {e}", path.display())))
}

/// Fetch a required value by JSON pointer (`/carpet`, `/phi/values`, ...).
pub fn get<'a>(root: &'a Value, ptr: &str) -> Result<&'a Value, CliError> {
    root.pointer(ptr)
        .ok_or_else(|| CliError::Input(format!("missing required field at `{ptr}`")))
}

pub fn opt<'a>(root: &'a Value, ptr: &str) -> Option<&'a Value> {
    root.pointer(ptr)
}

/// Deserialize the value at `ptr` into a typed object; errors carry the
/// pointer so the user can find the bad field.
pub fn parse<T: DeserializeOwned>(root: &Value, ptr: &str) -> Result<T, CliError> {
    let v = get(root, ptr)?;
    serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("at `{ptr}`: {e}")))
}

/// Like `parse`, but `None` when the field is absent.
pub fn parse_opt<T: DeserializeOwned>(root: &Value, ptr: &str) -> Result<Option<T>, CliError> {
    match opt(root, ptr) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| CliError::Input(format!("at `{ptr}`: {e}"))),
    }
}
