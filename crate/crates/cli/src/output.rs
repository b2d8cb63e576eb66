//! Rendering of command results as JSON, CSV, or aligned text.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<String>> for Cell {
    fn from(s: Option<String>) -> Self {
        s.map_or(Cell::Empty, Cell::Text)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<Option<bool>> for Cell {
    fn from(b: Option<bool>) -> Self {
        b.map_or(Cell::Empty, Cell::Bool)
    }
}

/// `x` with six significant digits, trailing zeros removed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("scientific format has an exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column `field, value` table.
    pub fn fields() -> Self {
        Table::new(&["field", "value"])
    }

    pub fn field(&mut self, name: impl Into<String>, value: impl Into<Cell>) {
        self.push(vec![Cell::Text(name.into()), value.into()]);
    }
}

/// Result of one command: machine-readable JSON plus a table for CSV and text.
pub struct Report {
    pub command: &'static str,
    pub result: Value,
    pub table: Table,
    /// Extra lines printed after the table in text mode.
    pub notes: Vec<String>,
    /// Set when an iterative solve stopped before certifying its answer.
    pub unconverged: bool,
}

impl Report {
    pub fn new(command: &'static str, result: &impl Serialize, table: Table) -> Self {
        Report {
            command,
            result: serde_json::to_value(result).expect("reports serialize"),
            table,
            notes: Vec::new(),
            unconverged: false,
        }
    }

    pub fn render(&self, format: Format, out: &mut impl Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                let envelope = serde_json::json!({
                    "command": self.command,
                    "version": env!("CARGO_PKG_VERSION"),
                    "converged": !self.unconverged,
                    "result": self.result,
                });
                serde_json::to_writer_pretty(&mut *out, &envelope)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&self.table.columns)?;
                for row in &self.table.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            Format::Text => {
                let cells: Vec<Vec<String>> = self.table.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
                let mut widths: Vec<usize> = self.table.columns.iter().map(|c| c.len()).collect();
                for row in &cells {
                    for (w, c) in widths.iter_mut().zip(row) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |out: &mut dyn Write, row: &[String]| -> std::io::Result<()> {
                    let padded: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
                    writeln!(out, "{}", padded.join("  ").trim_end())
                };
                let header: Vec<String> = self.table.columns.iter().map(|c| c.to_string()).collect();
                line(out, &header)?;
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                line(out, &rule)?;
                for row in &cells {
                    line(out, row)?;
                }
                for note in &self.notes {
                    writeln!(out, "{note}")?;
                }
                Ok(())
            }
        }
    }
}
