use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Rows for the CSV form of a result.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub struct Output {
    pub result: Value,
    pub table: Option<Table>,
}

impl Output {
    pub fn json(result: Value) -> Self {
        Output { result, table: None }
    }

    pub fn with_table(result: Value, table: Table) -> Self {
        Output { result, table: Some(table) }
    }
}

/// SHA-256 of the canonical JSON of the run configuration.
pub fn config_hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    format!("{:x}", Sha256::digest(bytes))
}

pub fn emit(command: &str, config: &Value, out: Output, format: Format, path: Option<&PathBuf>) -> Result<(), Failure> {
    let text = match format {
        Format::Json => {
            let doc = json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "config_hash": config_hash(config),
                "config": config,
                "result": out.result,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => match out.table {
            Some(t) => t.render(),
            None => return Err(Failure::config(format!("`{command}` has no CSV form; use --format json"))),
        },
    };
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::internal(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::internal(e.to_string())),
    }
}
