//! Atomic file output. A killed run must never leave a truncated CSV that
//! parses as complete, so everything goes through temp-file-then-rename in
//! the destination directory.

use std::io::Write;
use std::path::Path;

use crate::{CliError, CliResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |context: &str| {
        let context = format!("{context} for {}", path.display());
        move |source: std::io::Error| CliError::Io { context, source }
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io("creating temp file"))?;
    tmp.write_all(bytes).map_err(io("writing"))?;
    tmp.persist(path)
        .map_err(|e| io("renaming temp file")(e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(bandlab::Error::from)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
