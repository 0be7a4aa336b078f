//! CSV series and plain-text constant reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Comma-separated table with a fixed header; numbers use the shortest round-trip form.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s += &r.join(",");
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render())
    }
}

/// One CSV cell; floats use exponent notation so tiny margins stay short and exact.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:e}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => { $(impl Cell for $t { fn cell(&self) -> String { self.to_string() } })* };
}
display_cell!(usize, u64, bool, &str, String);

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::report::Cell::cell(&$v)),*] };
}

/// Sectioned `key = value` report, the same layout as the config files.
#[derive(Default)]
pub struct TextReport {
    body: String,
}

impl TextReport {
    pub fn new(title: &str) -> Self {
        Self { body: format!("# {title}\n") }
    }

    pub fn raw(&mut self, text: &str) -> &mut Self {
        self.body += text;
        if !text.ends_with('\n') {
            self.body.push('\n');
        }
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.body += &format!("\n[{name}]\n");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl Cell) -> &mut Self {
        self.body += &format!("{key} = {}\n", value.cell());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.body)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}
