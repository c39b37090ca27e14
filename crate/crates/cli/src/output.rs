//! File writers. Every CSV starts with one `# config: <json>` line holding
//! the resolved configuration, followed by a snake_case header row.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(OutDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// CSV of serializable records behind a config comment line.
    pub fn csv<R: Serialize>(&self, name: &str, header: &impl Serialize, rows: &[R]) -> CliResult<PathBuf> {
        let headers: Vec<&str> = Vec::new();
        self.csv_with_headers(name, header, &headers, rows)
    }

    /// As [`csv`](Self::csv), writing `headers` explicitly (needed when `rows` may be empty).
    pub fn csv_with_headers<R: Serialize>(
        &self,
        name: &str,
        header: &impl Serialize,
        headers: &[&str],
        rows: &[R],
    ) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut file = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
        write_comment(&mut file, header).map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(headers.is_empty())
            .from_writer(file);
        let io = |e: csv::Error, path: &Path| CliError::io(path, std::io::Error::other(e));
        if !headers.is_empty() {
            w.write_record(headers).map_err(|e| io(e, &path))?;
        }
        for r in rows {
            w.serialize(r).map_err(|e| io(e, &path))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("serializable");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn write_comment(out: &mut impl Write, header: &impl Serialize) -> std::io::Result<()> {
    let json = serde_json::to_string(header).expect("serializable");
    writeln!(out, "# config: {json}")
}

/// Reads a CSV written by [`OutDir::csv`], skipping comment lines.
pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<R>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::usage(format!("{}: {e}", path.display()))))
        .collect()
}
