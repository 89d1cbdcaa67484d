//! Versioned JSON-lines records.
//!
//! Every record written by the pipeline carries a `"v":1` field next to its
//! own fields, so readers can reject files from an incompatible layout.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Version { line: usize, found: u32 },
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    v: u32,
    #[serde(flatten)]
    record: T,
}

/// Serializes one record as a single JSON line (without the newline).
pub fn to_line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(&Versioned {
        v: SCHEMA_VERSION,
        record,
    })
    .expect("records serialize to JSON")
}

pub fn write_records<'a, T, W, I>(mut out: W, records: I) -> io::Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for r in records {
        writeln!(out, "{}", to_line(r))?;
    }
    out.flush()
}

pub fn from_line<T: DeserializeOwned>(line: &str, lineno: usize) -> Result<T, JsonlError> {
    let rec: Versioned<T> = serde_json::from_str(line).map_err(|source| JsonlError::Parse { line: lineno, source })?;
    if rec.v != SCHEMA_VERSION {
        return Err(JsonlError::Version {
            line: lineno,
            found: rec.v,
        });
    }
    Ok(rec.record)
}

/// Reads every non-blank line as a versioned record.
pub fn read_records<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_line(&line, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        text: String,
        n: u32,
    }

    #[test]
    fn line_carries_version() {
        let line = to_line(&Rec {
            text: "rain".into(),
            n: 3,
        });
        assert!(line.starts_with("{\"v\":1,"), "{line}");
        let back: Rec = from_line(&line, 1).unwrap();
        assert_eq!(back.n, 3);
    }

    #[test]
    fn rejects_other_versions() {
        let err = from_line::<Rec>(r#"{"v":2,"text":"x","n":1}"#, 7).unwrap_err();
        assert!(matches!(err, JsonlError::Version { line: 7, found: 2 }));
    }
}
