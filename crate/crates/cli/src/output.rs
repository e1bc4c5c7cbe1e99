//! CSV and JSON table files with a provenance header.
//!
//! ```text
//! # ddlab 0.1.0
//! # command: compare
//! # seed: 0
//! #> dims.d = 100
//! # units: 1,steps,1
//! kappa,t,L_G
//! 1.0000000000000000e2,1.0000000000000000e0,4.9...e-1
//! ```

use ddlab_core::table::{Column, Table};
use serde_json::{json, Value};
use thiserror::Error;

pub const TOOL: &str = "ddlab";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Canonical settings; replaying them reproduces the file.
    pub echo: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub provenance: Provenance,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("missing column row")]
    NoColumns,
    #[error("line {line}: {found} fields, expected {expected}")]
    Width { line: usize, expected: usize, found: usize },
    #[error("line {line}: `{value}` is not a number")]
    Number { line: usize, value: String },
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // 17 significant digits: exact round trip for every f64.
        format!("{v:.16e}")
    }
}

pub fn write_csv(out: &OutputTable) -> String {
    let p = &out.provenance;
    let mut s = String::new();
    s.push_str(&format!("# {TOOL} {}\n", p.version));
    s.push_str(&format!("# command: {}\n", p.command));
    s.push_str(&format!("# seed: {}\n", p.seed));
    for (k, v) in &p.echo {
        s.push_str(&format!("#> {k} = {v}\n"));
    }
    let units: Vec<&str> = out.table.columns.iter().map(|c| c.unit.as_str()).collect();
    s.push_str(&format!("# units: {}\n", units.join(",")));
    let names: Vec<&str> = out.table.columns.iter().map(|c| c.name.as_str()).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    for row in &out.table.rows {
        let fields: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<OutputTable, CsvError> {
    let mut version = None;
    let mut command = None;
    let mut seed = None;
    let mut echo = Vec::new();
    let mut units: Option<Vec<String>> = None;
    let mut columns: Option<Vec<Column>> = None;
    let mut rows = Vec::new();
    let header_err = |line: usize, message: &str| CsvError::Header { line, message: message.to_string() };

    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        if raw.is_empty() {
            continue;
        }
        if columns.is_none() {
            if let Some(rest) = raw.strip_prefix("#> ") {
                let (k, v) = rest.split_once(" = ").ok_or_else(|| header_err(line, "malformed config echo"))?;
                echo.push((k.to_string(), v.to_string()));
            } else if let Some(rest) = raw.strip_prefix("# command: ") {
                command = Some(rest.to_string());
            } else if let Some(rest) = raw.strip_prefix("# seed: ") {
                seed = Some(rest.parse::<u64>().map_err(|_| header_err(line, "seed is not an integer"))?);
            } else if let Some(rest) = raw.strip_prefix("# units: ") {
                units = Some(rest.split(',').map(str::to_string).collect());
            } else if let Some(rest) = raw.strip_prefix(&format!("# {TOOL} ")) {
                version = Some(rest.to_string());
            } else if raw.starts_with('#') {
                return Err(header_err(line, "unrecognized header line"));
            } else {
                let names: Vec<&str> = raw.split(',').collect();
                let units = units.take().ok_or_else(|| header_err(line, "column row before units"))?;
                if units.len() != names.len() {
                    return Err(CsvError::Width { line, expected: units.len(), found: names.len() });
                }
                columns = Some(names.iter().zip(units).map(|(n, u)| Column { name: n.to_string(), unit: u }).collect());
            }
            continue;
        }
        let width = columns.as_ref().map_or(0, Vec::len);
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != width {
            return Err(CsvError::Width { line, expected: width, found: fields.len() });
        }
        let row = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CsvError::Number { line, value: f.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }

    let columns = columns.ok_or(CsvError::NoColumns)?;
    let provenance = Provenance {
        version: version.ok_or_else(|| header_err(1, "missing tool line"))?,
        command: command.ok_or_else(|| header_err(1, "missing command line"))?,
        seed: seed.ok_or_else(|| header_err(1, "missing seed line"))?,
        echo,
    };
    Ok(OutputTable { provenance, table: Table { columns, rows } })
}

fn json_number(v: f64) -> Value {
    // JSON has no NaN or infinities; they become null.
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn write_json(out: &OutputTable) -> String {
    let p = &out.provenance;
    let config: serde_json::Map<String, Value> = p.echo.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let columns: Vec<Value> = out.table.columns.iter().map(|c| json!({ "name": c.name, "unit": c.unit })).collect();
    let rows: Vec<Value> = out.table.rows.iter().map(|r| Value::Array(r.iter().map(|&v| json_number(v)).collect())).collect();
    let doc = json!({
        "tool": TOOL,
        "version": p.version,
        "command": p.command,
        "seed": p.seed,
        "config": config,
        "columns": columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Config text equivalent to a file's echo block.
pub fn echo_as_config(provenance: &Provenance) -> String {
    provenance.echo.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
