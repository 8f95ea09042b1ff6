//! Fault mesh, station set and observation vector, with their CSV formats.
//!
//! All lengths are meters. Files:
//! - mesh: `id,x_m,y_m,z_m,area_m2,depth_m`
//! - stations: `label,x_m,y_m,z_m`
//! - observations: `label,ux_m,uy_m,uz_m` (axis sigmas come from the run config)
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! load/save cycle reproduces every value bit for bit.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const MESH_HEADER: [&str; 6] = ["id", "x_m", "y_m", "z_m", "area_m2", "depth_m"];
pub const STATIONS_HEADER: [&str; 4] = ["label", "x_m", "y_m", "z_m"];
pub const OBSERVATIONS_HEADER: [&str; 4] = ["label", "ux_m", "uy_m", "uz_m"];

/// Discretized fault with `M` subfaults.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultMesh {
    ids: Vec<String>,
    centroids: Vec<[f64; 3]>,
    areas: Vec<f64>,
    depths: Vec<f64>,
}

impl FaultMesh {
    pub fn new(
        ids: Vec<String>,
        centroids: Vec<[f64; 3]>,
        areas: Vec<f64>,
        depths: Vec<f64>,
    ) -> Result<Self> {
        let m = centroids.len();
        if m == 0 {
            return Err(Error::Validation(
                "fault mesh needs at least one subfault".into(),
            ));
        }
        if ids.len() != m || areas.len() != m || depths.len() != m {
            return Err(Error::Shape(format!(
                "mesh columns disagree: {} ids, {} centroids, {} areas, {} depths",
                ids.len(),
                m,
                areas.len(),
                depths.len()
            )));
        }
        for (i, c) in centroids.iter().enumerate() {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "subfault {i}: non-finite centroid"
                )));
            }
            if !(areas[i].is_finite() && areas[i] > 0.0) {
                return Err(Error::Validation(format!(
                    "subfault {i}: area must be positive, got {}",
                    areas[i]
                )));
            }
            if !(depths[i].is_finite() && depths[i] >= 0.0) {
                return Err(Error::Validation(format!(
                    "subfault {i}: depth must be non-negative, got {}",
                    depths[i]
                )));
            }
        }
        Ok(Self {
            ids,
            centroids,
            areas,
            depths,
        })
    }

    /// Mesh with ids `0..M`.
    pub fn from_parts(centroids: Vec<[f64; 3]>, areas: Vec<f64>, depths: Vec<f64>) -> Result<Self> {
        let ids = (0..centroids.len()).map(|i| i.to_string()).collect();
        Self::new(ids, centroids, areas, depths)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Number of slip unknowns, `2M`.
    pub fn slip_dim(&self) -> usize {
        2 * self.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn centroids(&self) -> &[[f64; 3]] {
        &self.centroids
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    /// Euclidean distance between centroids `i` and `j`, meters.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.centroids[i], self.centroids[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Applies `perm` so that new subfault `k` is old subfault `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        Self::new(
            perm.iter().map(|&p| self.ids[p].clone()).collect(),
            perm.iter().map(|&p| self.centroids[p]).collect(),
            perm.iter().map(|&p| self.areas[p]).collect(),
            perm.iter().map(|&p| self.depths[p]).collect(),
        )
    }

    pub fn from_csv_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let rows = read_rows(reader, source_name, &MESH_HEADER)?;
        let mut ids = Vec::with_capacity(rows.len());
        let mut centroids = Vec::with_capacity(rows.len());
        let mut areas = Vec::with_capacity(rows.len());
        let mut depths = Vec::with_capacity(rows.len());
        for (line, fields) in rows {
            let v = parse_floats(&fields[1..], source_name, line)?;
            ids.push(fields[0].clone());
            centroids.push([v[0], v[1], v[2]]);
            areas.push(v[3]);
            depths.push(v[4]);
        }
        Self::new(ids, centroids, areas, depths)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MESH_HEADER).map_err(csv_io)?;
        for i in 0..self.len() {
            let c = self.centroids[i];
            w.write_record([
                self.ids[i].clone(),
                fmt_f64(c[0]),
                fmt_f64(c[1]),
                fmt_f64(c[2]),
                fmt_f64(self.areas[i]),
                fmt_f64(self.depths[i]),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_fault_mesh(path: impl AsRef<Path>) -> Result<FaultMesh> {
    let path = path.as_ref();
    FaultMesh::from_csv_reader(File::open(path)?, &path.display().to_string())
}

pub fn save_fault_mesh(mesh: &FaultMesh, path: impl AsRef<Path>) -> Result<()> {
    mesh.write_csv(File::create(path)?)
}

/// `N` receivers where displacement is observed.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSet {
    labels: Vec<String>,
    coordinates: Vec<[f64; 3]>,
}

impl StationSet {
    pub fn new(labels: Vec<String>, coordinates: Vec<[f64; 3]>) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::Validation(
                "station set needs at least one station".into(),
            ));
        }
        if labels.len() != coordinates.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} stations",
                labels.len(),
                coordinates.len()
            )));
        }
        if let Some(k) = coordinates
            .iter()
            .position(|c| c.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Validation(format!(
                "station {k}: non-finite coordinate"
            )));
        }
        let mut seen = HashMap::new();
        for (k, l) in labels.iter().enumerate() {
            if let Some(prev) = seen.insert(l.as_str(), k) {
                return Err(Error::Validation(format!(
                    "duplicate station label {l:?} (rows {prev} and {k})"
                )));
            }
        }
        Ok(Self {
            labels,
            coordinates,
        })
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coordinates(&self) -> &[[f64; 3]] {
        &self.coordinates
    }

    pub fn from_csv_reader<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let rows = read_rows(reader, source_name, &STATIONS_HEADER)?;
        let mut labels = Vec::with_capacity(rows.len());
        let mut coordinates = Vec::with_capacity(rows.len());
        for (line, fields) in rows {
            let v = parse_floats(&fields[1..], source_name, line)?;
            labels.push(fields[0].clone());
            coordinates.push([v[0], v[1], v[2]]);
        }
        Self::new(labels, coordinates)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(STATIONS_HEADER).map_err(csv_io)?;
        for (l, c) in self.labels.iter().zip(&self.coordinates) {
            w.write_record([l.clone(), fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(c[2])])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_stations(path: impl AsRef<Path>) -> Result<StationSet> {
    let path = path.as_ref();
    StationSet::from_csv_reader(File::open(path)?, &path.display().to_string())
}

pub fn save_stations(stations: &StationSet, path: impl AsRef<Path>) -> Result<()> {
    stations.write_csv(File::create(path)?)
}

/// Observed displacements `Y` (length `3N`, station-major, per-station
/// `(u_x, u_y, u_z)`) and the per-axis noise standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector {
    values: DVector<f64>,
    axis_sigmas: [f64; 3],
}

impl ObservationVector {
    pub fn new(values: DVector<f64>, axis_sigmas: [f64; 3]) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(3) {
            return Err(Error::Shape(format!(
                "observation length {} is not a positive multiple of 3",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite observation value".into()));
        }
        if axis_sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Validation(format!(
                "axis sigmas must be positive, got {axis_sigmas:?}"
            )));
        }
        Ok(Self {
            values,
            axis_sigmas,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn axis_sigmas(&self) -> [f64; 3] {
        self.axis_sigmas
    }

    pub fn station_count(&self) -> usize {
        self.values.len() / 3
    }

    /// Reads the observations CSV and reorders rows into `stations` order.
    /// Every station must appear exactly once.
    pub fn from_csv_reader<R: Read>(
        reader: R,
        source_name: &str,
        stations: &StationSet,
        axis_sigmas: [f64; 3],
    ) -> Result<Self> {
        let rows = read_rows(reader, source_name, &OBSERVATIONS_HEADER)?;
        let index: HashMap<&str, usize> = stations
            .labels()
            .iter()
            .enumerate()
            .map(|(k, l)| (l.as_str(), k))
            .collect();
        let mut values = vec![f64::NAN; 3 * stations.len()];
        let mut filled = vec![false; stations.len()];
        for (line, fields) in rows {
            let k = *index.get(fields[0].as_str()).ok_or_else(|| {
                Error::parse(
                    source_name,
                    line,
                    format!("unknown station label {:?}", fields[0]),
                )
            })?;
            if filled[k] {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("duplicate station label {:?}", fields[0]),
                ));
            }
            let v = parse_floats(&fields[1..], source_name, line)?;
            values[3 * k..3 * k + 3].copy_from_slice(&v);
            filled[k] = true;
        }
        if let Some(k) = filled.iter().position(|f| !f) {
            return Err(Error::Validation(format!(
                "no observation for station {:?}",
                stations.labels()[k]
            )));
        }
        Self::new(DVector::from_vec(values), axis_sigmas)
    }

    pub fn write_csv<W: Write>(&self, writer: W, stations: &StationSet) -> Result<()> {
        if stations.len() != self.station_count() {
            return Err(Error::Shape(format!(
                "{} stations for {} observation triples",
                stations.len(),
                self.station_count()
            )));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(OBSERVATIONS_HEADER).map_err(csv_io)?;
        for (k, l) in stations.labels().iter().enumerate() {
            w.write_record([
                l.clone(),
                fmt_f64(self.values[3 * k]),
                fmt_f64(self.values[3 * k + 1]),
                fmt_f64(self.values[3 * k + 2]),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_observations(
    path: impl AsRef<Path>,
    stations: &StationSet,
    axis_sigmas: [f64; 3],
) -> Result<ObservationVector> {
    let path = path.as_ref();
    ObservationVector::from_csv_reader(
        File::open(path)?,
        &path.display().to_string(),
        stations,
        axis_sigmas,
    )
}

pub fn save_observations(
    obs: &ObservationVector,
    stations: &StationSet,
    path: impl AsRef<Path>,
) -> Result<()> {
    obs.write_csv(File::create(path)?, stations)
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Shape(format!(
            "permutation of length {} for {n} items",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Validation("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Header-checked records with their 1-based line numbers.
fn read_rows<R: Read>(
    reader: R,
    source_name: &str,
    header: &[&str],
) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Err(Error::parse(source_name, 1, "empty file")),
        Some(r) => r.map_err(|e| Error::parse(source_name, 1, e.to_string()))?,
    };
    if first.len() != header.len() || first.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(source_name, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

pub(crate) fn parse_floats(fields: &[String], source_name: &str, line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(source_name, line, format!("not a number: {f:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(
                    source_name,
                    line,
                    format!("non-finite value: {f:?}"),
                ))
            }
        })
        .collect()
}
