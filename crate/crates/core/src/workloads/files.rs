use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::Stream;
use crate::error::{Error, Result};
use crate::types::KeyId;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Numbered lines with any trailing `\r` removed.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

/// Reads a key trace: either one key token per line, or `timestamp,key`
/// rows when the first non-blank line contains a comma. A CSV first row
/// whose timestamp is not numeric is taken as a header. Keys are renumbered
/// densely in order of first appearance; timestamps must be non-decreasing
/// and are otherwise replaced by the message index.
pub fn trace_stream(path: impl AsRef<Path>) -> Result<Stream> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut ids: HashMap<String, KeyId> = HashMap::new();
    let mut keys = Vec::new();
    let mut csv = None;
    let mut last_ts = f64::NEG_INFINITY;

    for (lineno, raw) in lines(&text) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = csv.is_none();
        let is_csv = *csv.get_or_insert_with(|| line.contains(','));
        let token = if is_csv {
            let (ts, key) = line
                .split_once(',')
                .ok_or_else(|| parse_err(path, lineno, "expected `timestamp,key`"))?;
            match ts.trim().parse::<f64>() {
                Ok(ts) if ts.is_finite() => {
                    if ts < last_ts {
                        return Err(parse_err(path, lineno, "timestamps must be non-decreasing"));
                    }
                    last_ts = ts;
                }
                _ if first => continue,
                _ => return Err(parse_err(path, lineno, format!("bad timestamp `{}`", ts.trim()))),
            }
            key.trim()
        } else {
            line
        };
        if token.is_empty() {
            return Err(parse_err(path, lineno, "empty key"));
        }
        if token.contains(char::is_whitespace) {
            return Err(parse_err(path, lineno, format!("key `{token}` contains whitespace")));
        }
        let next = ids.len() as KeyId;
        keys.push(*ids.entry(token.to_string()).or_insert(next));
    }
    Ok(Stream::new(keys, ids.len()))
}

/// Reads a whitespace-separated `src dst` edge list (`#` comments allowed).
/// Each edge becomes one message routed by `dst`, assigned to a source by `src`.
pub fn graph_edge_stream(path: impl AsRef<Path>) -> Result<Stream> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut src_keys = Vec::new();
    let mut dst_keys = Vec::new();
    for (lineno, raw) in lines(&text) {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut vertex = |what: &str| -> Result<KeyId> {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(path, lineno, format!("missing {what} vertex")))?;
            tok.parse()
                .map_err(|_| parse_err(path, lineno, format!("bad {what} vertex `{tok}`")))
        };
        let src = vertex("source")?;
        let dst = vertex("destination")?;
        if fields.next().is_some() {
            return Err(parse_err(path, lineno, "expected exactly two vertex ids"));
        }
        src_keys.push(src);
        dst_keys.push(dst);
    }
    let key_count = dst_keys.iter().collect::<HashSet<_>>().len();
    Ok(Stream {
        keys: dst_keys,
        source_keys: Some(src_keys),
        key_count,
    })
}
