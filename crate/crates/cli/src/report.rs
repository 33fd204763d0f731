use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Either a table with a fixed header or a list of `field,value` pairs.
#[derive(Debug, Clone)]
pub enum Report {
    Table {
        header: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    },
    Fields(Vec<(String, Cell)>),
}

impl Report {
    pub fn table(header: &[&'static str]) -> Self {
        Report::Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        if let Report::Table { header, rows } = self {
            debug_assert_eq!(row.len(), header.len());
            rows.push(row);
        }
    }

    pub fn field(&mut self, name: impl Into<String>, value: impl Into<Cell>) {
        if let Report::Fields(fields) = self {
            fields.push((name.into(), value.into()));
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("json");
                s.push('\n');
                s
            }
        }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Table { header, rows } => {
                out.push_str(&header.join(","));
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Report::Fields(fields) => {
                out.push_str("field,value\n");
                for (name, value) in fields {
                    let _ = writeln!(out, "{name},{}", value.csv());
                }
            }
        }
        out
    }

    fn json(&self) -> Value {
        match self {
            Report::Table { header, rows } => Value::Array(
                rows.iter()
                    .map(|row| {
                        let obj: Map<String, Value> = header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect(),
            ),
            Report::Fields(fields) => Value::Object(
                fields
                    .iter()
                    .map(|(name, value)| (name.clone(), value.json()))
                    .collect(),
            ),
        }
    }
}
