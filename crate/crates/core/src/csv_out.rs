//! Minimal CSV emission shared by every output file.
//!
//! All files carry a header row. Floating-point values are written in
//! scientific notation with 17 significant digits so they round-trip
//! exactly through `f64::from_str`.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular table of numbers plus optional trailing `#` comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub trailer: Vec<String>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            trailer: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Append a comment line written after the data as `# <text>`.
    pub fn push_trailer(&mut self, text: impl Into<String>) {
        self.trailer.push(text.into());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        for t in &self.trailer {
            let _ = writeln!(out, "# {t}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Parse a table written by [`Table::to_csv_string`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line = lines.next().ok_or_else(|| Error::Csv("empty input".into()))?;
        let mut table = Table::new(header_line.split(',').map(|s| s.trim().to_string()));
        for (n, line) in lines.enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                table.trailer.push(rest.trim_start().to_string());
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Csv(format!("data line {}: {e}", n + 1)))?;
            if row.len() != table.header.len() {
                return Err(Error::Csv(format!(
                    "data line {}: expected {} fields, found {}",
                    n + 1,
                    table.header.len(),
                    row.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn trailer_lines_are_comments() {
        let mut t = Table::new(["a"]);
        t.push_row(vec![1.0]);
        t.push_trailer("armp=3");
        assert_eq!(t.to_csv_string(), "a\n1.0000000000000000e0\n# armp=3\n");
        assert_eq!(Table::parse(&t.to_csv_string()).unwrap(), t);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Table::parse("a,b\n1,2\n3\n").is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
