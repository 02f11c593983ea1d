//! Tagged CSV/JSON writer. Every CSV row and JSON document carries the
//! code version and the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use kerrcat::table::Table;
use serde_json::{json, Value};

use crate::error::CliError;

pub fn version_tag() -> String {
    format!("kerrcat-{}", env!("CARGO_PKG_VERSION"))
}

pub struct Output {
    dir: PathBuf,
    version: String,
    hash: String,
}

impl Output {
    pub fn new(dir: &Path, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), version: version_tag(), hash })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let mut header = vec!["version".to_string(), "config_hash".to_string()];
        header.extend(table.header.iter().cloned());
        let mut out = header.join(",");
        out.push('\n');
        for row in &table.rows {
            out.push_str(&self.version);
            out.push(',');
            out.push_str(&self.hash);
            for cell in row {
                out.push(',');
                out.push_str(cell);
            }
            out.push('\n');
        }
        self.write(name, &out)
    }

    pub fn json(&self, name: &str, data: Value) -> Result<PathBuf, CliError> {
        let doc = json!({ "version": self.version, "config_hash": self.hash, "data": data });
        let mut text = serde_json::to_string_pretty(&doc).expect("json value serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

/// Cell text safe for the unquoted CSV dialect.
pub fn cell(s: &str) -> String {
    s.replace([',', '\n'], ";")
}
