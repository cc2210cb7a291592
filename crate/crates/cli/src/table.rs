//! Row-oriented output shared by the CSV and JSON writers.
//!
//! Finite numbers go to JSON as numbers and to CSV with 17 significant
//! digits; both parse back to the same `f64`. Non-finite values are spelled
//! `inf`, `-inf`, `nan` in both.

use acl_core::bounds::fmt_num;
use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Str(String),
    Vec(Vec<f64>),
    Empty,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map(Cell::Num).unwrap_or(Cell::Empty)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Vec(v) => v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";"),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        fn num(x: f64) -> Value {
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(fmt_num(x)))
        }
        match self {
            Cell::Num(x) => num(*x),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Vec(v) => Value::Array(v.iter().map(|x| num(*x)).collect()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Cell {
        Cell::Int(i as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Cell {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Str(s)
    }
}

impl From<Vec<f64>> for Cell {
    fn from(v: Vec<f64>) -> Cell {
        Cell::Vec(v)
    }
}

/// A table whose every row ends with the config hash and the policy id.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    config_hash: String,
    policy_id: String,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str], config_hash: &str, policy_id: &str) -> Table {
        Table {
            command,
            columns: columns.to_vec(),
            rows: Vec::new(),
            config_hash: config_hash.into(),
            policy_id: policy_id.into(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.command);
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = self.columns.iter().copied().chain(["config_hash", "policy_id"]);
        w.write_record(header).expect("csv to memory");
        for row in &self.rows {
            let fields = row.iter().map(Cell::csv).chain([self.config_hash.clone(), self.policy_id.clone()]);
            w.write_record(fields).expect("csv to memory");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }

    fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, cell) in self.columns.iter().zip(row) {
                    m.insert((*c).into(), cell.json());
                }
                m.insert("config_hash".into(), Value::String(self.config_hash.clone()));
                m.insert("policy_id".into(), Value::String(self.policy_id.clone()));
                Value::Object(m)
            })
            .collect();
        let mut out = Map::new();
        out.insert("command".into(), Value::String(self.command.into()));
        out.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        out.insert("policy_id".into(), Value::String(self.policy_id.clone()));
        out.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(out)).expect("json serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_carry_the_same_numbers() {
        let mut t = Table::new("t", &["x", "v", "note"], "abc", "pol");
        t.push(vec![Cell::Num(0.1 + 0.2), Cell::Vec(vec![1.0 / 3.0, f64::INFINITY]), "a,b".into()]);
        let csv = t.render(Format::Csv);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("3.0000000000000004e-1,"));
        assert!(line.contains("\"a,b\""));
        assert!(line.ends_with(",abc,pol"));
        let json: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        let row = &json["rows"][0];
        assert_eq!(row["x"].as_f64().unwrap(), 0.1 + 0.2);
        assert_eq!(row["v"][1], Value::String("inf".into()));
        assert_eq!(row["policy_id"], "pol");
    }
}
