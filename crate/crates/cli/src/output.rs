use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CliError, Format, RunConfig};

/// Artifact writer for one command run. Nothing written here depends on wall
/// time, so replaying a manifest reproduces every file byte for byte.
pub struct Output {
    dir: PathBuf,
    format: Format,
    command: String,
    config: BTreeMap<String, String>,
    seed: u64,
}

impl Output {
    pub fn new(dir: &Path, format: Format, command: &str, cfg: &RunConfig, seed: u64) -> Result<Self, CliError> {
        Ok(Output {
            dir: dir.to_path_buf(),
            format,
            command: command.to_string(),
            config: cfg.entries().clone(),
            seed,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// `manifest.json`: config echo, seed, status and the command's own fields.
    pub fn manifest(&self, status: &str, exit_code: i32, body: Map<String, Value>) -> Result<PathBuf, CliError> {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command.clone()));
        m.insert("config".into(), serde_json::to_value(&self.config).expect("string map"));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("status".into(), Value::from(status));
        m.insert("exit_code".into(), Value::from(exit_code));
        m.extend(body);
        let mut text = serde_json::to_string_pretty(&Value::Object(m)).expect("serialisable manifest");
        text.push('\n');
        self.write("manifest.json", text.as_bytes())
    }

    /// `<stem>.csv` from `rows`, or `<stem>.json` from `json`, per `--format`.
    pub fn data<T: Serialize>(
        &self,
        stem: &str,
        json: &T,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        match self.format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(json).map_err(|e| CliError::Io(e.to_string()))?;
                text.push('\n');
                self.write(&format!("{stem}.json"), text.as_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(header).map_err(io)?;
                for r in rows {
                    w.write_record(r).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                self.write(&format!("{stem}.csv"), &bytes)
            }
        }
    }
}

/// Shortest round-trip decimal form; empty for non-finite values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}
