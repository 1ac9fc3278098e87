//! JSON config files overlaid by command-line flags.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Reads the optional config file, then overrides every key whose flag was
/// given (non-null, non-empty, non-false) and deserializes the result.
pub fn resolve<F: Serialize, R: DeserializeOwned>(config: Option<&Path>, flags: &F) -> Result<R, CliError> {
    let mut merged = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => {
                    return Err(CliError::Usage(format!(
                        "config {} must hold a JSON object",
                        path.display()
                    )))
                }
                Err(e) => return Err(CliError::Usage(format!("config {}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    for (k, v) in given {
        let unset = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            Value::Object(o) => o.is_empty(),
            _ => false,
        };
        if !unset {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("configuration: {e}")))
}
