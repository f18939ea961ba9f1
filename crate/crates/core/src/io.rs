//! Observation files: CSV with header `x_1,...,x_D,y`, one observation per
//! row.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::domain::ObservationSet;
use crate::error::{Error, Result};

/// Largest D accepted in a data file header.
pub const MAX_DATA_DIM: usize = 4096;

/// Parses observation CSV text. Blank lines and lines starting with `#` are
/// skipped. Errors carry 1-based line numbers.
pub fn parse_data_csv(text: &str) -> Result<ObservationSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let Some((header_line, header)) = lines.next() else {
        return Err(Error::parse(1, "empty data file"));
    };
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = header.len() - 1;
    if dim == 0 || dim > MAX_DATA_DIM {
        return Err(Error::parse(
            header_line,
            format!("header needs x_1..x_D and y with 1 <= D <= {MAX_DATA_DIM}"),
        ));
    }
    for (k, field) in header.iter().enumerate() {
        let expected = if k == dim {
            "y".to_string()
        } else {
            format!("x_{}", k + 1)
        };
        if *field != expected {
            return Err(Error::parse(
                header_line,
                format!("column {} is '{field}', expected '{expected}'", k + 1),
            ));
        }
    }

    let mut obs = ObservationSet::empty(dim);
    for (line, row) in lines {
        let mut values = Vec::with_capacity(dim + 1);
        for (k, field) in row.split(',').map(str::trim).enumerate() {
            if k > dim {
                return Err(Error::parse(line, format!("more than {} fields", dim + 1)));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(line, format!("field {} ('{field}') is not a number", k + 1)))?;
            if !v.is_finite() {
                return Err(Error::parse(line, format!("field {} is not finite", k + 1)));
            }
            values.push(v);
        }
        if values.len() != dim + 1 {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", dim + 1, values.len()),
            ));
        }
        let y = values.pop().expect("dim + 1 fields");
        obs.push(values, y).map_err(|e| Error::parse(line, e.to_string()))?;
    }
    if obs.is_empty() {
        return Err(Error::parse(header_line, "data file has a header but no observations"));
    }
    Ok(obs)
}

pub fn read_data_csv(path: &Path) -> Result<ObservationSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    parse_data_csv(&text).map_err(|e| e.context(format!("in {}", path.display())))
}

pub fn write_data_csv<W: Write>(obs: &ObservationSet, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=obs.dim()).map(|i| format!("x_{i}")).collect();
    writeln!(out, "{},y", header.join(","))?;
    for (p, y) in obs.points().iter().zip(obs.values()) {
        let xs: Vec<String> = p.iter().map(f64::to_string).collect();
        writeln!(out, "{},{y}", xs.join(","))?;
    }
    Ok(())
}
