//! Fixed-precision CSV and JSON emission.

use serde::Serialize;
use serde_json::Value;

use super::config::Config;

pub const SCHEMA_VERSION: u32 = 1;

/// Twelve significant digits in scientific notation. Negative zero prints
/// as zero.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        format!("{:.11e}", 0.0)
    } else {
        format!("{x:.11e}")
    }
}

fn round_sig(x: f64) -> f64 {
    if x.is_finite() { fmt_num(x).parse().unwrap() } else { x }
}

/// Rounds every float in `v` to twelve significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = serde_json::Number::from_f64(round_sig(n.as_f64().unwrap())).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// A JSON report: `schema_version`, `command` and the resolved config,
/// then the command's own fields.
pub fn json_report(command: &str, config: &Config, body: impl Serialize) -> String {
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("command".into(), command.into());
    out.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    match serde_json::to_value(body).expect("report serializes") {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    let mut value = Value::Object(out);
    round_json(&mut value);
    let mut text = serde_json::to_string_pretty(&value).expect("JSON value serializes");
    text.push('\n');
    text
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(n: i64) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// CSV preceded by `#` comment lines carrying the schema version, the
/// command and the resolved config as TOML.
pub fn csv_report(command: &str, config: &Config, header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = format!("# schema_version = {SCHEMA_VERSION}\n# command = {command}\n");
    for line in config.to_toml().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8"));
    out
}
