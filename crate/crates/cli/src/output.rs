//! Serialization of tables and summaries.
//!
//! CSV: `#`-prefixed provenance lines (tool version, then the resolved
//! config as `key = value`), a header row, then rows with every number
//! written to 17 significant digits. LF line endings throughout.
//! JSON: pretty-printed objects carrying `version` and `config` fields.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::RunConfig;

pub const VERSION: &str = concat!("hydrodeco ", env!("CARGO_PKG_VERSION"));

/// 17 significant digits: exact round trip for f64.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn config_json(cfg: &RunConfig) -> Value {
    let map: Map<String, Value> = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    Value::Object(map)
}

/// One cell of a table row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => num(*x),
            Cell::Bool(b) => json!(b),
        }
    }
}

pub fn table_csv(cfg: &RunConfig, columns: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = format!("# {VERSION}\n");
    for (k, v) in cfg.entries() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn table_json(cfg: &RunConfig, columns: &[&str], rows: &[Vec<Cell>]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = columns
                .iter()
                .zip(row)
                .map(|(c, cell)| (c.to_string(), cell.json()))
                .collect();
            Value::Object(obj)
        })
        .collect();
    json!({
        "version": VERSION,
        "config": config_json(cfg),
        "columns": columns,
        "rows": rows,
    })
}

/// Wraps a summary body with the provenance fields.
pub fn summary(cfg: &RunConfig, body: Map<String, Value>) -> Value {
    let mut obj = Map::new();
    obj.insert("version".into(), json!(VERSION));
    obj.insert("config".into(), config_json(cfg));
    obj.extend(body);
    Value::Object(obj)
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes a table as `<stem>.csv` or `<stem>.json` depending on the format.
pub fn write_table(
    dir: &Path,
    stem: &str,
    cfg: &RunConfig,
    columns: &[&str],
    rows: &[Vec<Cell>],
) -> io::Result<()> {
    match cfg.format {
        crate::config::Format::Csv => {
            fs::write(dir.join(format!("{stem}.csv")), table_csv(cfg, columns, rows))
        }
        crate::config::Format::Json => write_json(
            &dir.join(format!("{stem}.json")),
            &table_json(cfg, columns, rows),
        ),
    }
}
