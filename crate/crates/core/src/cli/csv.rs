//! Plain CSV output. Every file opens with a `# wser <table> v<N>` line so
//! readers can detect schema changes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn new(name: &str, version: u32, columns: &[&str]) -> Self {
        let mut text = format!("# wser {name} v{version}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

/// Shortest round-trip representation; empty for NaN.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        let mut s = String::new();
        write!(s, "{v}").expect("write to string");
        s
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}
