//! File helpers. Outputs are written to a temporary file in the target
//! directory and renamed into place, so a failed write never leaves a
//! truncated file behind.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Reads and parses a JSON input. Parse errors carry the line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let runtime = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(runtime)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(runtime)?;
    tmp.write_all(bytes).map_err(runtime)?;
    tmp.as_file().sync_all().map_err(runtime)?;
    tmp.persist(path).map_err(|e| runtime(e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{\n  \"a\": 1,\n  oops\n}").unwrap();
        let err = read_json::<serde_json::Value>(&p).unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("line 3")), "{err}");
        assert!(matches!(read_json::<serde_json::Value>(&dir.path().join("missing.json")), Err(CliError::Config(_))));
    }
}
