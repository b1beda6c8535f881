//! Versioned tabular output: CSV with a schema comment line, or JSON.

use std::io::Write;
use std::path::Path;

use nstorus::{Error, Result};
use serde::Serialize;

use crate::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    /// Fixed 17-significant-digit form so that output is byte-stable and round-trips.
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(i) => (*i).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    schema: &'a str,
    version: u32,
    columns: &'a [&'static str],
    rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let t = JsonTable {
                    schema: self.name,
                    version: SCHEMA_VERSION,
                    columns: &self.columns,
                    rows: self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect(),
                };
                let mut out = serde_json::to_vec_pretty(&t).map_err(io_err)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = format!("# nstorus {} schema v{SCHEMA_VERSION}\n", self.name).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns).map_err(io_err)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Ok(out)
    }

    /// Script plotting `y_columns` against `x_column` from the CSV at `data`.
    pub fn gnuplot(&self, data: &Path, x_column: &str, y_columns: &[&str], log: bool) -> String {
        let col = |name: &str| self.columns.iter().position(|c| *c == name).map_or(1, |i| i + 1);
        let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
        if log {
            s.push_str("set logscale y\n");
        }
        s.push_str(&format!("set xlabel '{x_column}'\n"));
        let file = data.file_name().map_or_else(|| data.display().to_string(), |f| f.to_string_lossy().into_owned());
        let plots: Vec<String> = y_columns
            .iter()
            .map(|y| format!("'{file}' using {}:{} with linespoints title '{y}'", col(x_column), col(y)))
            .collect();
        s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
        s
    }
}

pub fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Configuration(format!("output: {e}"))
}

/// Write `bytes` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io_err(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(io_err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["x", "n", "note"]);
        t.push(vec![0.1.into(), 3usize.into(), Cell::Empty]);
        t.push(vec![Cell::Num(f64::INFINITY), (-1i64).into(), "a,b".into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let s = String::from_utf8(sample().render(Format::Csv).unwrap()).unwrap();
        assert_eq!(s, "# nstorus demo schema v1\nx,n,note\n1.0000000000000001e-1,3,\ninf,-1,\"a,b\"\n");
    }

    #[test]
    fn csv_round_trips_floats() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, -7.0, f64::MIN_POSITIVE] {
            let s = Cell::Num(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_slice(&sample().render(Format::Json).unwrap()).unwrap();
        assert_eq!(v["schema"], "demo");
        assert_eq!(v["version"], 1);
        assert_eq!(v["rows"][0][1], 3);
        assert!(v["rows"][1][0].is_null());
    }
}
