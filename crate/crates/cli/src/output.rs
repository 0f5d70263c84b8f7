//! Line-oriented rendering shared by every subcommand.
//!
//! JSONL records carry a `kind` field so that `report` can turn a saved
//! results file back into tables.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Jsonl,
}

/// Serializes `value` as an object and inserts the `kind` tag first.
pub fn tagged<T: Serialize>(kind: &str, value: &T) -> Value {
    let mut out = Map::new();
    out.insert("kind".into(), Value::String(kind.into()));
    match serde_json::to_value(value).expect("result types serialize to JSON") {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("value".into(), other);
        }
    }
    Value::Object(out)
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Groups consecutive records of the same kind into TSV blocks whose columns
/// are the union of keys in first-seen order.
pub fn records_to_tables(records: &[Value]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < records.len() {
        let kind = records[i]
            .get("kind")
            .map(cell)
            .unwrap_or_else(|| "record".into());
        let mut j = i;
        while j < records.len()
            && records[j]
                .get("kind")
                .map(cell)
                .unwrap_or_else(|| "record".into())
                == kind
        {
            j += 1;
        }
        let block = &records[i..j];
        let mut columns: Vec<String> = Vec::new();
        for r in block {
            if let Some(obj) = r.as_object() {
                for k in obj.keys() {
                    if k != "kind" && !columns.contains(k) {
                        columns.push(k.clone());
                    }
                }
            }
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("# {kind}\n"));
        out.push_str(&columns.join("\t"));
        out.push('\n');
        for r in block {
            let row: Vec<String> = columns
                .iter()
                .map(|c| r.get(c).map(cell).unwrap_or_else(|| "NA".into()))
                .collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        i = j;
    }
    out
}

/// One `key<TAB>value` line per field, skipping the kind tag.
pub fn key_values(record: &Value) -> String {
    let mut out = String::new();
    if let Some(obj) = record.as_object() {
        for (k, v) in obj {
            if k != "kind" {
                out.push_str(&format!("{k}\t{}\n", cell(v)));
            }
        }
    }
    out
}

pub fn jsonl(records: &[Value]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}
