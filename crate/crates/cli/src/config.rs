//! Layered configuration: built-in defaults, then a JSON config file, then
//! command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Common {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

const COMMON_KEYS: [&str; 3] = ["out", "format", "threads"];

/// Reads a config file. A run manifest is accepted too, in which case its
/// `config` object is used and its `command` must match.
pub fn load_file(path: &Path, command: &str) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("config file {} is not valid JSON", path.display()))?;
    let Value::Object(mut obj) = value else {
        bail!("config file {} must hold a JSON object", path.display());
    };
    if let (Some(cmd), Some(_)) = (obj.get("command"), obj.get("config")) {
        if cmd.as_str() != Some(command) {
            bail!("manifest was written by `{cmd}`, not `{command}`");
        }
        match obj.remove("config") {
            Some(Value::Object(inner)) => return Ok(inner),
            _ => bail!("manifest config must be a JSON object"),
        }
    }
    Ok(obj)
}

/// Merges the layers and splits off the shared options.
pub fn resolve<C>(file: Option<Map<String, Value>>, flags: &impl Serialize) -> Result<(Common, C)>
where
    C: Serialize + DeserializeOwned + Default,
{
    let Value::Object(mut merged) = serde_json::to_value(C::default())? else {
        unreachable!("command configs serialize to objects");
    };
    for key in COMMON_KEYS {
        merged.insert(key.into(), Value::Null);
    }
    let known: Vec<String> = merged.keys().cloned().collect();
    if let Some(file) = file {
        merged.extend(file);
    }
    // Flags that were not given serialize as null, and switches that were
    // not given as false; neither overrides the file.
    if let Some(flags) = as_object(flags)? {
        merged.extend(
            flags
                .into_iter()
                .filter(|(_, v)| !v.is_null() && *v != Value::Bool(false)),
        );
    }
    if let Some(bad) = merged.keys().find(|k| !known.contains(k)) {
        bail!("unknown configuration key `{bad}`");
    }
    let mut common = Map::new();
    for key in COMMON_KEYS {
        if let Some(v) = merged.remove(key) {
            common.insert(key.into(), v);
        }
    }
    let common: Common =
        serde_json::from_value(Value::Object(common)).context("invalid shared option")?;
    let config: C = serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;
    Ok((common, config))
}

fn as_object(v: &impl Serialize) -> Result<Option<Map<String, Value>>> {
    match serde_json::to_value(v)? {
        Value::Object(m) => Ok(Some(m)),
        _ => Ok(None),
    }
}

/// Full resolved configuration as one flat JSON object.
pub fn echo<C: Serialize>(common: &Common, config: &C) -> Result<Value> {
    let Value::Object(mut obj) = serde_json::to_value(config)? else {
        unreachable!("command configs serialize to objects");
    };
    let Value::Object(c) = serde_json::to_value(common)? else {
        unreachable!();
    };
    obj.extend(c);
    Ok(Value::Object(obj))
}

/// Parses a sign list such as `+1,-1,1`.
pub fn parse_signs(text: &str) -> Result<Vec<i8>> {
    text.split(',')
        .map(|t| match t.trim() {
            "+1" | "1" | "+" => Ok(1),
            "-1" | "-" => Ok(-1),
            other => bail!("invalid sign `{other}`; expected +1 or -1"),
        })
        .collect()
}
