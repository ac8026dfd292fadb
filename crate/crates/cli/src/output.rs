//! Artifact serialization and run manifests.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Common, Format};

/// Version of every JSON document and manifest written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TCLAB_OUT_DIR";

/// Wraps a JSON body with its schema version.
#[derive(Serialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn json<T: Serialize>(body: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

/// Rows as CSV with a header taken from the field names.
pub fn csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub enum Destination {
    Stdout,
    File(PathBuf),
}

pub fn destination(common: &Common, command: &str, format: Format) -> Destination {
    match common.out.as_deref() {
        Some("-") => Destination::Stdout,
        Some(p) => Destination::File(PathBuf::from(p)),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            Destination::File(dir.join(format!("{command}.{}", format.extension())))
        }
    }
}

/// Writes the primary output and its manifest. With `--out -` the output
/// goes to stdout and the manifest to stderr.
pub fn emit(dest: &Destination, body: &str, command: &str, config: Value) -> Result<()> {
    let output = match dest {
        Destination::Stdout => Value::from("-"),
        Destination::File(p) => Value::from(p.display().to_string()),
    };
    let mut manifest = serde_json::to_string_pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "tclab",
        "version": tclab::VERSION,
        "command": command,
        "output": output,
        "config": config,
    }))?;
    manifest.push('\n');
    match dest {
        Destination::Stdout => {
            std::io::stdout().write_all(body.as_bytes())?;
            std::io::stderr().write_all(manifest.as_bytes())?;
        }
        Destination::File(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create output directory {}", dir.display()))?;
            }
            std::fs::write(path, body)
                .with_context(|| format!("cannot write output file {}", path.display()))?;
            let mut mpath = path.clone().into_os_string();
            mpath.push(".manifest.json");
            let mpath = PathBuf::from(mpath);
            std::fs::write(&mpath, manifest)
                .with_context(|| format!("cannot write manifest {}", mpath.display()))?;
        }
    }
    Ok(())
}
