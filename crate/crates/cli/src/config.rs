//! Config files and flag precedence.
//!
//! A config file is a flat JSON or TOML table whose keys are flag names with
//! `_` for `-` (`mu_theta = 13.0`). Flags given on the command line win over
//! the file; keys the subcommand does not use are ignored with a warning.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Reads JSON or TOML, chosen by extension (`.toml`, otherwise JSON with a
/// TOML fallback).
pub fn read_table(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let value: Value = if is_toml {
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
    } else {
        match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(json_err) => toml::from_str(&text)
                .map_err(|_| CliError::usage(format!("{}: not JSON ({json_err}) or TOML", path.display())))?,
        }
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::usage(format!("{}: top level must be a table", path.display()))),
    }
}

/// Deserializes a JSON or TOML document into `T`.
pub fn read_typed<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let table = read_table(path)?;
    serde_json::from_value(Value::Object(table)).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Fills every unset flag of `flags` from `file`.
pub fn resolve<A: Serialize + DeserializeOwned>(flags: &A, file: &Map<String, Value>) -> CliResult<A> {
    let Value::Object(mut merged) = serde_json::to_value(flags)? else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in file {
        match merged.get_mut(k) {
            Some(slot) if slot.is_null() => *slot = v.clone(),
            Some(_) => {}
            None if k == "format" => {}
            None => log::warn!("config key `{k}` is not used by this subcommand"),
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::usage(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    struct A {
        lambda: Option<f64>,
        bid: Option<u32>,
    }

    #[test]
    fn flags_win() {
        let flags = A {
            lambda: Some(2.0),
            bid: None,
        };
        let file: Map<String, Value> = serde_json::from_str(r#"{"lambda": 5.0, "bid": 3, "other": 1}"#).unwrap();
        assert_eq!(
            resolve(&flags, &file).unwrap(),
            A {
                lambda: Some(2.0),
                bid: Some(3)
            }
        );
    }

    #[test]
    fn wrong_types_are_usage_errors() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"bid": "three"}"#).unwrap();
        let e = resolve(&A::default(), &file).unwrap_err();
        assert_eq!(e.kind.code(), 2);
    }
}
