use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::binary::{self, Shape};
use crate::error::{Error, Result};
use crate::geometry::{csv_io, fmt_f64, parse_floats};

/// Row-major store of chain draws: one row per retained state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Draws {
    dim: usize,
    data: Vec<f64>,
}

impl Draws {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "draw width");
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_vector(&self, t: usize) -> DVector<f64> {
        DVector::from_column_slice(self.row(t))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Componentwise mean; `None` when empty.
    pub fn mean(&self) -> Option<DVector<f64>> {
        if self.is_empty() {
            return None;
        }
        let mut m = DVector::zeros(self.dim);
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        Some(m / self.len() as f64)
    }

    /// Keeps rows in the order given by `order`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.dim, order.len());
        for &t in order {
            out.push(self.row(t));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in self.rows() {
            w.write_record(r.iter().map(|v| fmt_f64(*v)))
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut out: Option<Draws> = None;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::parse(source_name, line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let fields: Vec<String> = rec.iter().map(str::to_string).collect();
            let vals = parse_floats(&fields, source_name, line)?;
            out.get_or_insert_with(|| Draws::new(vals.len()))
                .push(&vals);
        }
        out.ok_or_else(|| Error::parse(source_name, 1, "no draws"))
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        binary::write_matrix(
            path,
            Shape {
                rows: self.len(),
                cols: self.dim,
            },
            &self.data,
        )
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let (shape, data) = binary::read_matrix(path)?;
        Self::from_rows(shape.cols, data)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}
