//! Table and artifact writers.
//!
//! Every CSV table starts with a `# config=<json>` line and may end with
//! `# key=value` trailer lines; readers should treat `#` lines as comments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Where tables go: files in a directory, or one stream.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    pub fn to_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `contents` to `<dir>/<name>`, or to `stdout` when there is no directory.
    pub fn emit(&mut self, name: &str, contents: &str, stdout: &mut dyn Write) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
                self.written.push(path);
            }
            None => {
                if !self.written.is_empty() {
                    writeln!(stdout)?;
                }
                stdout.write_all(contents.as_bytes())?;
                self.written.push(PathBuf::from(name));
            }
        }
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn csv_table<T: Serialize>(config: &RunConfig, rows: &[T], trailer: &[String]) -> Result<String> {
    let mut out = format!("# config={}\n", serde_json::to_string(config)?);
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    out.push_str(std::str::from_utf8(&writer.into_inner().context("flushing csv")?)?);
    for line in trailer {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    Ok(out)
}

pub fn json_document<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
