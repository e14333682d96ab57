//! JSON instance files and rational rendering.
//!
//! An instance file looks like `{"valuations": [["1/2", "1/2"], ["0.25", "0.75"]]}`.
//! Entries may be `p/q` strings, decimal strings or plain JSON numbers. Rows
//! are normalized on load.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::rational::{format_decimal, format_exact, parse_rational, Rational};

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    valuations: Vec<Vec<Entry>>,
}

fn parse_error(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| {
        parse_error(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let mut rows = Vec::with_capacity(raw.valuations.len());
    for (i, row) in raw.valuations.iter().enumerate() {
        let mut parsed = Vec::with_capacity(row.len());
        for (j, entry) in row.iter().enumerate() {
            let text = match entry {
                Entry::Text(s) => s.clone(),
                Entry::Number(n) => n.to_string(),
            };
            let value = parse_rational(&text).map_err(|e| parse_error(format!("valuations[{i}][{j}]"), e.to_string()))?;
            parsed.push(value);
        }
        rows.push(parsed);
    }
    Instance::normalize(rows)
}

pub fn parse_instance(path: &std::path::Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path.display().to_string(), e.to_string()))?;
    parse_instance_str(&text).map_err(|e| match e {
        Error::Parse { context, message } => parse_error(format!("{}: {context}", path.display()), message),
        other => other,
    })
}

/// How rationals appear in output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Render {
    #[default]
    Exact,
    Decimal(usize),
}

impl Render {
    pub fn scalar(self, r: &Rational) -> Value {
        Value::String(match self {
            Render::Exact => format_exact(r),
            Render::Decimal(k) => format_decimal(r, k),
        })
    }

    pub fn vector(self, v: &[Rational]) -> Value {
        Value::Array(v.iter().map(|r| self.scalar(r)).collect())
    }

    pub fn matrix(self, rows: &[Vec<Rational>]) -> Value {
        Value::Array(rows.iter().map(|r| self.vector(r)).collect())
    }
}

pub fn instance_json(inst: &Instance, render: Render) -> Value {
    json!({ "valuations": render.matrix(inst.rows()) })
}

/// Exact serialization; [`parse_instance_str`] reads it back unchanged.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_json(inst, Render::Exact)).expect("string values serialize");
    s.push('\n');
    s
}
