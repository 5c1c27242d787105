//! Tabular results and their CSV / JSON renderings.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Flag(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Flag(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Twelve significant digits.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // JSON numbers carry the same twelve digits as the CSV
            Cell::Num(x) if x.is_finite() => format_num(*x).parse::<f64>().map(Value::from).unwrap_or(Value::Null),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => Value::from(*i),
            Cell::Flag(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column, NaN for non-numeric cells.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// Appends the rows of `other`, which must share the column layout.
    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn to_json_value(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(m)
            })
            .collect();
        let mut m = Map::new();
        m.insert("name".into(), Value::from(self.name.as_str()));
        m.insert("rows".into(), Value::Array(rows));
        Value::Object(m)
    }
}

/// JSON document for a set of tables. A single one-row table collapses to a
/// plain object.
pub fn tables_to_json(tables: &[Table]) -> String {
    let v = match tables {
        [t] if t.rows.len() == 1 => t.to_json_value()["rows"][0].clone(),
        [t] => t.to_json_value(),
        ts => Value::Array(ts.iter().map(Table::to_json_value).collect()),
    };
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["x_rad_s", "label", "ok"]);
        t.push(vec![(1.0 / 3.0).into(), Cell::from("a,b"), true.into()]);
        t.push(vec![f64::NAN.into(), "plain".into(), false.into()]);
        t
    }

    #[test]
    fn csv_has_twelve_digits() {
        let s = sample().to_csv();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("x_rad_s,label,ok"));
        assert_eq!(lines.next(), Some("3.33333333333e-1,\"a,b\",true"));
        assert_eq!(lines.next(), Some("nan,plain,false"));
    }

    #[test]
    fn json_keeps_column_order() {
        let s = tables_to_json(&[sample()]);
        let a = s.find("x_rad_s").unwrap();
        let b = s.find("label").unwrap();
        assert!(a < b);
        assert!(s.contains("null"));
    }

    #[test]
    fn single_row_collapses() {
        let mut t = Table::new("one", &["c_eff"]);
        t.push(vec![264.0.into()]);
        let v: Value = serde_json::from_str(&tables_to_json(&[t])).unwrap();
        assert_eq!(v["c_eff"], Value::from(264.0));
    }
}
