//! Result serialization with config echo and atomic writes.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

/// Wraps a result with the echo of the configuration that produced it, so
/// every output file round-trips its generating run.
pub fn envelope<C: Serialize, R: Serialize>(
    subcommand: &str,
    config: &C,
    result: &R,
) -> anyhow::Result<Value> {
    Ok(json!({
        "subcommand": subcommand,
        "config": serde_json::to_value(config)?,
        "result": serde_json::to_value(result)?,
    }))
}

/// Writes bytes atomically: a temporary file in the target directory is
/// persisted over the destination, so interrupted runs leave no partial
/// output at the target path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("persisting output to {}", path.display()))?;
    Ok(())
}

/// Emits a JSON value to the output path (atomically) or stdout.
pub fn emit_json(out: Option<&Path>, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn emit_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
