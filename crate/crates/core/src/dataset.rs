//! Delimited-text ingestion of `(x, u, v)` records.
//!
//! The header must name the columns `x`, `u` and `v` (case-insensitive, any
//! order, extra columns ignored). Comma and tab delimiters are detected from
//! the header line. Empty fields and `NA` mark missing values.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::{validate_sample, RawRecord, ValidatedSample};

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn parse_field(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Format(format!("row {row}, column {column}: cannot parse '{s}' as a number")))
}

/// Raw records in file order.
pub fn parse_records(text: &str) -> Result<Vec<RawRecord>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let find = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.trim().trim_matches('"').eq_ignore_ascii_case(name))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::Format(format!("header has no column '{name}'"))),
            _ => Err(Error::Format(format!("header names column '{name}' more than once"))),
        }
    };
    let (ix, iu, iv) = (find("x")?, find("u")?, find("v")?);

    let mut rows = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let get = |i: usize, name: &str| parse_field(rec.get(i).unwrap_or(""), row, name);
        rows.push(RawRecord {
            x: get(ix, "x")?,
            u: get(iu, "u")?,
            v: get(iv, "v")?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

pub fn read_records<R: Read>(mut reader: R) -> Result<Vec<RawRecord>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_records(&text)
}

/// Reads and validates a dataset file.
pub fn load_dataset(path: &Path) -> Result<ValidatedSample> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    validate_sample(&parse_records(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_with_missing_values() {
        let text = "x,u,v\n1,0,2\nNA,0,2\n3,,4\n2.5,2,3\n";
        let rows = parse_records(text).unwrap();
        assert_eq!(rows.len(), 4);
        let v = validate_sample(&rows).unwrap();
        assert_eq!(v.sample.len(), 2);
        assert_eq!(v.dropped_rows, vec![1, 2]);
    }

    #[test]
    fn tab_delimited_any_order_extra_columns() {
        let text = "id\tV\tX\tU\na\t2\t1\t0\nb\t4\t3\t2\n";
        let rows = parse_records(text).unwrap();
        assert_eq!(rows[1], RawRecord::complete(3.0, 2.0, 4.0));
    }

    #[test]
    fn header_order_does_not_matter() {
        let a = parse_records("x,u,v\n1,0,2\n5,4,6\n").unwrap();
        let b = parse_records("v,x,u\n2,1,0\n6,5,4\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse_records("").unwrap_err(), Error::EmptyInput);
        assert_eq!(parse_records("x,u,v\n").unwrap_err(), Error::EmptyInput);
        assert!(matches!(parse_records("x,u\n1,0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_records("x,u,v\n1,zero,2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_records("x,u,v\n1,0\n"), Err(Error::Format(_))));
        assert!(matches!(parse_records("x,x,u,v\n1,1,0,2\n"), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/nonexistent/data.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
