//! Matrix CSV files: one row per spatial index `k`, one column per time `n`,
//! with an optional header row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Mat;

pub fn read_matrix<R: Read>(r: R) -> Result<Mat<f64>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            // a non-numeric first line is a header
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Format(format!("row {}: {e}", i + 1))),
        }
    }
    Mat::from_rows(&rows)
}

pub fn read_matrix_file<P: AsRef<Path>>(path: P) -> Result<Mat<f64>> {
    read_matrix(std::fs::File::open(path)?)
}

pub fn write_matrix<W: Write>(w: W, m: &Mat<f64>, header: Option<&[String]>) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    if let Some(h) = header {
        wr.write_record(h)?;
    }
    for r in 0..m.nrows() {
        wr.write_record(m.row(r).iter().map(|v| format!("{v:?}")))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_matrix_file<P: AsRef<Path>>(path: P, m: &Mat<f64>, header: Option<&[String]>) -> Result<()> {
    write_matrix(std::io::BufWriter::new(std::fs::File::create(path)?), m, header)
}

/// A single row vector, such as the mixing sequence `γ`.
pub fn write_vector_file<P: AsRef<Path>>(path: P, v: &[f64]) -> Result<()> {
    write_matrix_file(path, &Mat::from_col_major(1, v.len(), v.to_vec())?, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_and_without_header() {
        let m = Mat::from_fn(2, 3, |k, n| k as f64 * 1.5 - n as f64 / 3.0);
        for header in [None, Some(vec!["1".to_string(), "t2".into(), "t3".into()])] {
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m, header.as_deref()).unwrap();
            let back = read_matrix(buf.as_slice()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_matrix("1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix("1,2\n3,x\n".as_bytes()).is_err());
    }
}
