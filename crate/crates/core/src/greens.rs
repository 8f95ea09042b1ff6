//! The linear forward operator `X` (3N × 2M) mapping slip to displacement.
//!
//! Rows are station-major with per-station order `(u_x, u_y, u_z)`; columns
//! are subfault-major with per-subfault order `(strike, dip)`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3x2};

use crate::binary::{self, Shape};
use crate::error::{Error, Result};
use crate::geometry::{csv_io, fmt_f64, parse_floats, FaultMesh, StationSet};

/// Direction pattern used by [`synthetic_kernel`]: columns are the
/// displacement directions produced by unit strike and unit dip slip.
pub const SYNTHETIC_PATTERN: [[f64; 2]; 3] = [[0.2, 1.0], [1.0, 0.1], [0.0, 0.5]];

#[derive(Debug, Clone, PartialEq)]
pub struct GreensMatrix {
    entries: DMatrix<f64>,
}

impl GreensMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || !entries.nrows().is_multiple_of(3) {
            return Err(Error::Shape(format!(
                "Green's matrix needs 3N rows, found {}",
                entries.nrows()
            )));
        }
        if entries.ncols() == 0 || !entries.ncols().is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "Green's matrix needs 2M columns, found {}",
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite Green's matrix entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn station_count(&self) -> usize {
        self.entries.nrows() / 3
    }

    pub fn subfault_count(&self) -> usize {
        self.entries.ncols() / 2
    }

    /// Checks the shape against a mesh and station set.
    pub fn check_consistent(&self, mesh: &FaultMesh, stations: &StationSet) -> Result<()> {
        if self.subfault_count() != mesh.len() || self.station_count() != stations.len() {
            return Err(Error::Shape(format!(
                "Green's matrix is {}x{}, expected {}x{} for {} stations and {} subfaults",
                self.entries.nrows(),
                self.entries.ncols(),
                3 * stations.len(),
                2 * mesh.len(),
                stations.len(),
                mesh.len()
            )));
        }
        Ok(())
    }

    /// `X D`.
    pub fn apply(&self, slip: &DVector<f64>) -> Result<DVector<f64>> {
        if slip.len() != self.entries.ncols() {
            return Err(Error::Shape(format!(
                "slip vector of length {} for {} columns",
                slip.len(),
                self.entries.ncols()
            )));
        }
        Ok(&self.entries * slip)
    }

    /// Headerless CSV, one matrix row per line.
    pub fn from_csv_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        let mut cols = None;
        let mut rows = 0usize;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(source_name, line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let fields: Vec<String> = rec.iter().map(str::to_string).collect();
            values.extend(parse_floats(&fields, source_name, line)?);
            cols.get_or_insert(fields.len());
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::parse(source_name, 1, "empty matrix"))?;
        Self::new(DMatrix::from_row_slice(rows, cols, &values))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.entries.row_iter() {
            w.write_record(row.iter().map(|v| fmt_f64(*v)))
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_binary(bytes: &[u8], shape: Shape) -> Result<Self> {
        let values = binary::decode_f64_le(bytes, shape)?;
        Self::new(DMatrix::from_row_slice(shape.rows, shape.cols, &values))
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.entries.transpose().as_slice().to_vec()
    }

    pub fn shape(&self) -> Shape {
        Shape {
            rows: self.entries.nrows(),
            cols: self.entries.ncols(),
        }
    }
}

/// Loads CSV, or `.f64` binary with its `.json` sidecar, by extension.
pub fn load_greens(path: impl AsRef<Path>) -> Result<GreensMatrix> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "f64") {
        let (shape, values) = binary::read_matrix(path)?;
        GreensMatrix::new(DMatrix::from_row_slice(shape.rows, shape.cols, &values))
    } else {
        GreensMatrix::from_csv_reader(File::open(path)?, &path.display().to_string())
    }
}

pub fn save_greens(greens: &GreensMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "f64") {
        binary::write_matrix(path, greens.shape(), &greens.row_major())
    } else {
        greens.write_csv(File::create(path)?)
    }
}

/// Assembles `X` from per-(station, subfault) 3×2 blocks.
///
/// `blocks[k * M + i]` is the block for station `k` and subfault `i`; the
/// result has `X[3k + r, 2i + c] = areas[i] * blocks[k * M + i][(r, c)]`.
pub fn assemble_greens(
    blocks: &[Matrix3x2<f64>],
    station_count: usize,
    areas: &[f64],
) -> Result<GreensMatrix> {
    let m = areas.len();
    if station_count == 0 || m == 0 || blocks.len() != station_count * m {
        return Err(Error::Shape(format!(
            "{} blocks for a {}x{} station-by-subfault grid",
            blocks.len(),
            station_count,
            m
        )));
    }
    let mut x = DMatrix::zeros(3 * station_count, 2 * m);
    for k in 0..station_count {
        for (i, &area) in areas.iter().enumerate() {
            let block = &blocks[k * m + i];
            for r in 0..3 {
                for c in 0..2 {
                    x[(3 * k + r, 2 * i + c)] = area * block[(r, c)];
                }
            }
        }
    }
    GreensMatrix::new(x)
}

/// Deterministic distance-decay stand-in for elastic Green's functions.
///
/// Each block is `exp(-dist / decay_length) * SYNTHETIC_PATTERN`, where `dist`
/// is the station-to-centroid distance. Entries are displacement per unit
/// slip, so no area factor is applied. This is a test fixture: the resulting
/// operator has at most rank `2N`.
pub fn synthetic_kernel(
    mesh: &FaultMesh,
    stations: &StationSet,
    decay_length: f64,
) -> Result<GreensMatrix> {
    if !(decay_length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "decay length must be positive, got {decay_length}"
        )));
    }
    let (n, m) = (stations.len(), mesh.len());
    let mut x = DMatrix::zeros(3 * n, 2 * m);
    for (k, s) in stations.coordinates().iter().enumerate() {
        for (i, c) in mesh.centroids().iter().enumerate() {
            let dist =
                ((s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2) + (s[2] - c[2]).powi(2)).sqrt();
            let factor = (-dist / decay_length).exp();
            for (r, row) in SYNTHETIC_PATTERN.iter().enumerate() {
                for (col, p) in row.iter().enumerate() {
                    x[(3 * k + r, 2 * i + col)] = factor * p;
                }
            }
        }
    }
    GreensMatrix::new(x)
}
