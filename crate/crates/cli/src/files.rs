//! Slip-vector CSV, run manifests and config loading.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use slipinv::geometry::fmt_f64;
use slipinv::FaultMesh;

use crate::config::{parse_config_text, RunConfig};
use crate::error::{CliError, CliResult};

pub const SLIP_HEADER: [&str; 3] = ["id", "d_s_m", "d_d_m"];
pub const MANIFEST_NAME: &str = "run_manifest.json";

pub fn write_slip_csv(path: &Path, mesh: &FaultMesh, slip: &DVector<f64>) -> CliResult<()> {
    if slip.len() != mesh.slip_dim() {
        return Err(CliError::Usage(format!(
            "slip of length {} for {} subfaults",
            slip.len(),
            mesh.len()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(SLIP_HEADER).map_err(|e| csv_err(path, e))?;
    for (i, id) in mesh.ids().iter().enumerate() {
        w.write_record([id.clone(), fmt_f64(slip[2 * i]), fmt_f64(slip[2 * i + 1])])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a slip CSV and orders it by the mesh ids.
pub fn parse_slip_csv<R: Read>(
    reader: R,
    source: &str,
    mesh: &FaultMesh,
) -> CliResult<DVector<f64>> {
    let bad = |line: usize, message: String| {
        CliError::Core(slipinv::Error::Parse {
            source_name: source.to_string(),
            line,
            message,
        })
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let index: HashMap<&str, usize> = mesh
        .ids()
        .iter()
        .enumerate()
        .map(|(k, id)| (id.as_str(), k))
        .collect();
    let mut slip = vec![f64::NAN; mesh.slip_dim()];
    let mut seen = vec![false; mesh.len()];
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 1;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        if n == 0 {
            if rec.iter().ne(SLIP_HEADER) {
                return Err(bad(
                    line,
                    format!("expected header {}", SLIP_HEADER.join(",")),
                ));
            }
            continue;
        }
        if rec.len() != 3 {
            return Err(bad(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let k = *index
            .get(&rec[0])
            .ok_or_else(|| bad(line, format!("unknown subfault id {:?}", &rec[0])))?;
        if seen[k] {
            return Err(bad(line, format!("duplicate subfault id {:?}", &rec[0])));
        }
        for c in 0..2 {
            let v: f64 = rec[c + 1]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| bad(line, format!("invalid number {:?}", &rec[c + 1])))?;
            slip[2 * k + c] = v;
        }
        seen[k] = true;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(bad(0, format!("no slip for subfault {:?}", mesh.ids()[k])));
    }
    Ok(DVector::from_vec(slip))
}

pub fn read_slip_csv(path: &Path, mesh: &FaultMesh) -> CliResult<DVector<f64>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_slip_csv(f, &path.display().to_string(), mesh)
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Effective value of every config key.
    pub config: BTreeMap<String, String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

pub fn parse_manifest(text: &str) -> CliResult<Manifest> {
    Ok(serde_json::from_str(text)?)
}

/// Loads a config file, or a previous run's manifest when the path ends
/// in `.json`. Without a path, all defaults apply.
pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return RunConfig::from_entries(&BTreeMap::new(), Path::new("."));
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    // absolute, so the paths echoed into a manifest replay from anywhere
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = std::path::absolute(parent).map_err(|e| CliError::io(parent, e))?;
    let entries = if path.extension().is_some_and(|e| e == "json") {
        parse_manifest(&text)?.config
    } else {
        parse_config_text(&text)?
    };
    RunConfig::from_entries(&entries, &base)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> FaultMesh {
        FaultMesh::new(
            vec!["a".into(), "b".into()],
            vec![[0.0, 0.0, -1e3], [1e3, 0.0, -1e3]],
            vec![1e6, 1e6],
            vec![1e3, 1e3],
        )
        .unwrap()
    }

    #[test]
    fn slip_round_trip_and_reorder() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let slip = DVector::from_vec(vec![0.1, -0.2, 1.0 / 3.0, 4e-300]);
        write_slip_csv(&p, &mesh(), &slip).unwrap();
        assert_eq!(read_slip_csv(&p, &mesh()).unwrap(), slip);
        let text = "id,d_s_m,d_d_m\nb,3,4\na,1,2\n";
        let v = parse_slip_csv(text.as_bytes(), "t", &mesh()).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn slip_parse_errors() {
        for bad in [
            "",
            "id,x,y\na,1,2\nb,3,4\n",
            "id,d_s_m,d_d_m\na,1,2\n",
            "id,d_s_m,d_d_m\na,1,2\na,1,2\nb,1,1\n",
            "id,d_s_m,d_d_m\na,1,2\nc,1,1\n",
            "id,d_s_m,d_d_m\na,1,nan\nb,1,1\n",
            "id,d_s_m,d_d_m\na,1\nb,1,1\n",
        ] {
            assert!(
                parse_slip_csv(bad.as_bytes(), "t", &mesh()).is_err(),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn manifest_rejects_unknown_fields() {
        let m = Manifest {
            tool: "slipinv".into(),
            version: "0".into(),
            command: "invert".into(),
            seed: 1,
            threads: None,
            config: BTreeMap::new(),
            outputs: vec![],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(parse_manifest(&text).unwrap(), m);
        assert!(parse_manifest(&text.replace("\"tool\"", "\"tool2\"")).is_err());
    }
}
