//! Matrix files and CSV artifacts.
//!
//! Binary matrices are `LRSM1`, two little-endian `u64` dimensions, then the
//! entries as little-endian `f64` in row-major order. Files ending in `.csv`
//! hold a plain numeric grid instead, one row per line, no header.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use lrsparse::solver::RunTrace;
use lrsparse::DenseMatrix;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 5] = b"LRSM1";
const HEADER_LEN: usize = 5 + 16;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn save_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let bytes = if is_csv(path) {
        matrix_to_csv(m).into_bytes()
    } else {
        encode_binary(m)
    };
    write_file(path, &bytes)
}

pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if is_csv(path) {
        let text = std::str::from_utf8(&bytes).map_err(|e| (e.valid_up_to(), "invalid UTF-8".to_string()));
        text.and_then(parse_csv)
    } else {
        decode_binary(&bytes)
    };
    parsed.map_err(|(offset, reason)| CliError::Parse {
        path: path.to_path_buf(),
        offset,
        reason,
    })
}

pub fn encode_binary(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for x in m.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Errors are `(byte offset, reason)`.
pub fn decode_binary(bytes: &[u8]) -> Result<DenseMatrix, (usize, String)> {
    if bytes.len() < HEADER_LEN {
        return Err((bytes.len(), format!("truncated header: need {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    if &bytes[..5] != MAGIC {
        return Err((0, "bad magic, expected LRSM1".into()));
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let (rows, cols) = (dim(5), dim(13));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or((5, format!("dimensions {rows}x{cols} overflow")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < expected {
        let at = HEADER_LEN + body.len() / 8 * 8;
        return Err((
            at,
            format!("truncated data: {rows}x{cols} needs {expected} bytes, found {}", body.len()),
        ));
    }
    if body.len() > expected {
        return Err((HEADER_LEN + expected, format!("{} trailing bytes after data", body.len() - expected)));
    }
    let mut data = Vec::with_capacity(expected / 8);
    for (k, chunk) in body.chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().unwrap());
        if !x.is_finite() {
            return Err((HEADER_LEN + 8 * k, format!("non-finite entry {x}")));
        }
        data.push(x);
    }
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| (HEADER_LEN, e.to_string()))
}

/// Shortest round-trip representation, so reading it back is bit-exact.
pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, x) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{x:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<DenseMatrix, (usize, String)> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        let offset = line_start;
        line_start += line.len();
        if body.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        let mut field_start = offset;
        for field in body.split(',') {
            let token = field.trim();
            let at = field_start + (field.len() - field.trim_start().len());
            let x: f64 = token.parse().map_err(|_| (at, format!("not a number: {token:?}")))?;
            if !x.is_finite() {
                return Err((at, format!("non-finite entry {token}")));
            }
            data.push(x);
            count += 1;
            field_start += field.len() + 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err((offset, format!("row {} has {count} entries, expected {c}", rows + 1)));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or((0, "empty matrix".to_string()))?;
    DenseMatrix::new(rows, cols, data).map_err(|e| (0, e.to_string()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub const TRACE_HEADER: &str = "iter,phase,objective,rel_err_x,rel_err_s,d2_z,D_zs,secs";

/// Trace CSV; with `trial` set, rows gain a leading `trial` column so several
/// runs can share one file.
pub fn trace_csv(config_json: &str, traces: &[(Option<usize>, &RunTrace)]) -> String {
    let mut out = format!("# config: {config_json}\n");
    let tagged = traces.iter().any(|(t, _)| t.is_some());
    if tagged {
        out.push_str("trial,");
    }
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (trial, trace) in traces {
        for r in trace.records() {
            if tagged {
                write!(out, "{},", trial.unwrap_or(0)).unwrap();
            }
            writeln!(
                out,
                "{},{},{:e},{},{},{},{},{}",
                r.iteration,
                r.phase,
                r.objective,
                cell(r.rel_err_x),
                cell(r.rel_err_s),
                cell(r.d2_z),
                cell(r.combined),
                cell(r.secs),
            )
            .unwrap();
        }
    }
    out
}

/// Generic table with the config comment line and a header row.
pub fn table_csv(config_json: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("# config: {config_json}\n{}\n", header.join(","));
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_fn(7, 5, |i, j| ((i * 5 + j) as f64 * 0.37).sin() * 10f64.powi(j as i32 - 2))
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let m = sample();
        let back = decode_binary(&encode_binary(&m)).unwrap();
        assert!(back.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.shape(), (7, 5));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = sample();
        let back = parse_csv(&matrix_to_csv(&m)).unwrap();
        assert!(back.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_binary(&sample());
        let (at, msg) = decode_binary(&bytes[..bytes.len() - 3]).unwrap_err();
        assert_eq!(at, HEADER_LEN + 34 * 8);
        assert!(msg.contains("truncated"));
        let (at, _) = decode_binary(&bytes[..10]).unwrap_err();
        assert_eq!(at, 10);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert_eq!(decode_binary(b"LRSM2aaaaaaaaaaaaaaaa").unwrap_err().0, 0);
        let mut bytes = encode_binary(&DenseMatrix::zeros(1, 2));
        bytes[HEADER_LEN + 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(decode_binary(&bytes).unwrap_err().0, HEADER_LEN + 8);
        assert_eq!(parse_csv("1,2\n3,x\n").unwrap_err().0, 6);
        assert_eq!(parse_csv("1,2\n3\n").unwrap_err().0, 4);
        assert!(parse_csv("1,inf\n").is_err());
        assert!(parse_csv("\n").is_err());
    }

    #[test]
    fn csv_accepts_scientific_notation() {
        let m = parse_csv("1.5e-3, -2E+2\r\n3.0,4e0\n").unwrap();
        assert_eq!(m.as_slice(), &[1.5e-3, -200.0, 3.0, 4.0]);
    }
}
