//! Fixed-format CSV output shared by every report.
//!
//! Floats are written with 17 significant digits in scientific notation so a
//! value round-trips exactly and identical inputs give identical bytes.

use std::io::Write;

use crate::{Error, Result};

const MODULE: &str = "csvio";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_bool(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// Header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |source| Error::Io { module: MODULE, source };
        writeln!(w, "{}", self.header.join(",")).map_err(io)?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to memory cannot fail");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_bool(true)]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b\n1,true\n");
    }
}
