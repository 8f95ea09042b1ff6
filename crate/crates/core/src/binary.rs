//! Raw little-endian `f64` matrices with a JSON shape sidecar.
//!
//! `name.f64` holds `rows * cols` values in row-major order; `name.json`
//! holds `{"rows":R,"cols":C}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn len(&self) -> Option<usize> {
        self.rows.checked_mul(self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }
}

/// Sidecar path for a binary file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn parse_sidecar(text: &str) -> Result<Shape> {
    serde_json::from_str(text).map_err(|e| Error::parse("sidecar", e.line(), e.to_string()))
}

/// Decodes `bytes` as a row-major matrix of the given shape.
pub fn decode_f64_le(bytes: &[u8], shape: Shape) -> Result<Vec<f64>> {
    let expected = shape
        .len()
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Shape(format!("shape {shape:?} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "expected {expected} bytes for {}x{}, found {}",
            shape.rows,
            shape.cols,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn encode_f64_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_matrix(path: &Path, shape: Shape, row_major: &[f64]) -> Result<()> {
    if shape.len() != Some(row_major.len()) {
        return Err(Error::Shape(format!(
            "{} values for shape {}x{}",
            row_major.len(),
            shape.rows,
            shape.cols
        )));
    }
    fs::write(path, encode_f64_le(row_major))?;
    fs::write(
        sidecar_path(path),
        serde_json::to_string(&shape).expect("shape serializes"),
    )?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<(Shape, Vec<f64>)> {
    let shape = parse_sidecar(&fs::read_to_string(sidecar_path(path))?)?;
    let values = decode_f64_le(&fs::read(path)?, shape)?;
    Ok((shape, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_format() {
        let s = Shape { rows: 6, cols: 4 };
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"rows":6,"cols":4}"#);
        assert_eq!(parse_sidecar(r#"{"rows":6,"cols":4}"#).unwrap(), s);
        assert!(parse_sidecar(r#"{"rows":6}"#).is_err());
        assert!(parse_sidecar(r#"{"rows":-1,"cols":2}"#).is_err());
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let bytes = encode_f64_le(&[1.0, 2.0, 3.0]);
        assert!(decode_f64_le(&bytes, Shape { rows: 2, cols: 2 }).is_err());
        assert!(decode_f64_le(
            &bytes,
            Shape {
                rows: usize::MAX,
                cols: 3
            }
        )
        .is_err());
        assert_eq!(
            decode_f64_le(&bytes, Shape { rows: 1, cols: 3 }).unwrap(),
            [1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.f64");
        let vals = [0.1, -2.5e-300, f64::MAX, 7.0, 1.0 / 3.0, -0.0];
        write_matrix(&path, Shape { rows: 2, cols: 3 }, &vals).unwrap();
        let (shape, back) = read_matrix(&path).unwrap();
        assert_eq!(shape, Shape { rows: 2, cols: 3 });
        assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
