//! CSV reading and writing. Every emitted file carries a provenance comment
//! line (command and config hash) above the header row; floats are written
//! in Rust's shortest round-trip form so identical runs produce identical
//! bytes.

use geomx::types::{BivariateSeries, MarginScale};
use geomx::{Error, Result};
use std::io::Write;
use std::path::Path;

pub struct CsvWriter {
    out: Box<dyn Write>,
}

impl CsvWriter {
    pub fn create(path: &Path, provenance: &str, header: &str) -> Result<CsvWriter> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::data(format!("cannot create {}: {e}", path.display())))?;
        let mut w = CsvWriter {
            out: Box::new(std::io::BufWriter::new(file)),
        };
        w.comment(provenance)?;
        w.line(header)?;
        Ok(w)
    }

    pub fn comment(&mut self, text: &str) -> Result<()> {
        self.raw(&format!("# {text}\n"))
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        self.raw(text)?;
        self.raw("\n")
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.line(&fields.join(","))
    }

    fn raw(&mut self, s: &str) -> Result<()> {
        self.out
            .write_all(s.as_bytes())
            .map_err(|e| Error::data(format!("write failed: {e}")))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::data(format!("flush failed: {e}")))
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Parsed CSV: header names and rows of string fields; comment lines are
/// skipped.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push(fields);
        }
    }
    Ok(CsvTable {
        header: header.ok_or_else(|| Error::data(format!("{} is empty", path.display())))?,
        rows,
    })
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("missing column '{name}'")))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.get(idx)
                    .ok_or_else(|| Error::data(format!("row {} too short", r + 1)))?
                    .parse::<f64>()
                    .map_err(|_| {
                        Error::data(format!("row {}: '{}' is not a number", r + 1, row[idx]))
                    })
            })
            .collect()
    }

    pub fn string_column(&self, name: &str) -> Result<Vec<String>> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[idx].clone()).collect())
    }
}

/// Read a (t, x1, x2) pair series on Laplace margins.
pub fn read_pair_series(path: &Path) -> Result<BivariateSeries> {
    let table = read_csv(path)?;
    let t = table.f64_column("t")?;
    let x1 = table.f64_column("x1")?;
    let x2 = table.f64_column("x2")?;
    BivariateSeries::new(t, x1, x2, MarginScale::Laplace)
}

/// Read a (date, price) series; dates stay opaque strings.
pub fn read_price_series(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let table = read_csv(path)?;
    Ok((table.string_column("date")?, table.f64_column("price")?))
}
