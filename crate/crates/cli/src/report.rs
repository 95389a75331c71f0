//! Rendering of command reports as an aligned table, CSV or JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;
use tbe_chart::known::Arl;

use crate::cli::{Format, OutputArgs};
use crate::error::{CliError, CliResult};

/// A report in every supported format.
pub struct Report {
    pub json: Value,
    pub csv: String,
    pub table: String,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report is valid JSON");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone(),
            Format::Table => self.table.clone(),
        }
    }
}

/// Explicit `--format` wins; otherwise the `--out` extension decides, with
/// JSON for files and a table for the terminal.
pub fn resolve_format(out: &OutputArgs) -> Format {
    if let Some(f) = out.format {
        return f;
    }
    match &out.out {
        None => Format::Table,
        Some(p) => match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("txt") => Format::Table,
            _ => Format::Json,
        },
    }
}

pub fn emit(out: &OutputArgs, report: &Report) -> CliResult<()> {
    let text = report.render(resolve_format(out));
    match &out.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn arl_text(a: Arl) -> String {
    match a.finite() {
        Some(v) => v.to_string(),
        None => "unbounded".into(),
    }
}

/// One CSV record from already-formatted fields.
pub fn csv_line(fields: &[String]) -> String {
    let mut s = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    s.push('\n');
    s
}

/// `key: value` lines with the keys padded to a common width.
pub fn key_values(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

/// Right-aligned columns under a header.
pub fn grid(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut s = line(header);
    for row in rows {
        s.push_str(&line(row));
    }
    s
}

/// Fixed-precision number for human tables.
pub fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e7).contains(&x.abs()) {
        format!("{:.4}", x)
    } else {
        format!("{:.6e}", x)
    }
}
