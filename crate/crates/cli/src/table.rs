//! The rate-experiment CSV: one row per sample size.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = [
    "n",
    "m_tilde",
    "hs_cov_gap",
    "sigma_gap",
    "total_bound",
    "rate_pred",
    "emp_discrepancy",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmRow {
    pub n: usize,
    pub m_tilde: f64,
    pub hs_cov_gap: f64,
    pub sigma_gap: f64,
    pub total_bound: f64,
    pub rate_pred: f64,
    /// Missing unless the experiment ran Monte Carlo replicas.
    pub emp_discrepancy: Option<f64>,
}

/// Scientific notation with 12 significant digits; `NaN` for missing values.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_rows<W: Write>(out: W, rows: &[BmRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_float(r.m_tilde),
            format_float(r.hs_cov_gap),
            format_float(r.sigma_gap),
            format_float(r.total_bound),
            format_float(r.rate_pred),
            format_float(r.emp_discrepancy.unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_string(rows: &[BmRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

fn csv_error(line: u64, msg: impl Into<String>) -> Error {
    Error::Csv {
        line,
        msg: msg.into(),
    }
}

/// Parses a file written by [`write_rows`]. Errors carry 1-based line numbers.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<BmRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = Vec::new();
    let mut seen_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !seen_header {
            if rec.iter().ne(HEADER) {
                return Err(csv_error(line, format!("expected header {}", HEADER.join(","))));
            }
            seen_header = true;
            continue;
        }
        if rec.len() != HEADER.len() {
            return Err(csv_error(
                line,
                format!("expected {} fields, found {}", HEADER.len(), rec.len()),
            ));
        }
        let n = rec[0]
            .parse::<usize>()
            .map_err(|e| csv_error(line, format!("n: {e}")))?;
        let mut vals = [0.0; 6];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = rec[i + 1]
                .parse::<f64>()
                .map_err(|e| csv_error(line, format!("{}: {e}", HEADER[i + 1])))?;
        }
        rows.push(BmRow {
            n,
            m_tilde: vals[0],
            hs_cov_gap: vals[1],
            sigma_gap: vals[2],
            total_bound: vals[3],
            rate_pred: vals[4],
            emp_discrepancy: (!vals[5].is_nan()).then_some(vals[5]),
        });
    }
    if !seen_header {
        return Err(csv_error(1, "empty file"));
    }
    Ok(rows)
}
