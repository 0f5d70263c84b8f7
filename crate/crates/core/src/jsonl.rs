//! Line-delimited JSON helpers shared by every log reader.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Non-blank lines of `text` paired with their 1-based line numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub(crate) fn parse_line<T: DeserializeOwned>(line_no: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::malformed(line_no, e.to_string()))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes one value as a single JSON line (with trailing newline).
pub fn to_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("in-memory records always serialize");
    s.push('\n');
    s
}
