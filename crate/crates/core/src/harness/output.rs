use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Floats are written with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// An RFC-4180 table with CRLF line ends.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut c = Self::default();
        c.push_line(header.iter().map(|h| quote(h.as_ref())));
        c
    }

    /// Wraps text that is already CSV.
    pub fn from_raw(text: String) -> Self {
        Self { text }
    }

    fn push_line<I: Iterator<Item = String>>(&mut self, cells: I) {
        self.text.push_str(&cells.collect::<Vec<_>>().join(","));
        self.text.push_str("\r\n");
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.push_line(cells.into_iter().map(|c| match c {
            Cell::Num(v) => fmt_f64(v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => quote(&s),
            Cell::Empty => String::new(),
        }));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}
