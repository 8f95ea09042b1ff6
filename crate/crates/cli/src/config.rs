//! Run configuration: flat `key = value` text with dotted sections.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be one
//! of [`KEYS`]; unspecified keys take the listed defaults. Relative paths are
//! resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use slipinv::hyperopt::{HyperPriors, LogGrid};
use slipinv::postproc::MagnitudeParams;
use slipinv::{MaternParams, PriorSpec, SamplerConfig};

use crate::error::{CliError, CliResult};
use crate::gridspec::{parse_grid_spec, GridSpec};

/// `(key, default, description)`. An empty default means "unset".
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "paths.mesh",
        "",
        "fault mesh CSV (id,x_m,y_m,z_m,area_m2,depth_m)",
    ),
    ("paths.stations", "", "station CSV (label,x_m,y_m,z_m)"),
    (
        "paths.greens",
        "",
        "Green's matrix, CSV or .f64 with .json sidecar",
    ),
    (
        "paths.observations",
        "",
        "observation CSV (label,ux_m,uy_m,uz_m)",
    ),
    (
        "paths.draws",
        "",
        "draws for mw/summarize; default <out>/draws.f64",
    ),
    (
        "paths.map_slip",
        "",
        "optional slip CSV (id,d_s_m,d_d_m) evaluated by mw",
    ),
    ("paths.out", "out", "output directory"),
    (
        "noise.sigma_x",
        "0.0021",
        "noise standard deviation, x axis (m)",
    ),
    (
        "noise.sigma_y",
        "0.0025",
        "noise standard deviation, y axis (m)",
    ),
    (
        "noise.sigma_z",
        "0.0051",
        "noise standard deviation, z axis (m)",
    ),
    ("prior.beta_s", "1", "strike precision factor"),
    ("prior.beta_d", "0.2", "dip precision factor"),
    ("prior.z_lim_m", "50000", "depth penalty onset (m)"),
    ("prior.bounds_s", "-0.1,0.1", "strike slip bounds lo,hi (m)"),
    ("prior.bounds_d", "-0.0804,0.4", "dip slip bounds lo,hi (m)"),
    (
        "prior.sigma_beta_sq",
        "2e-4",
        "prior scale, or `auto` to minimize the marginal objective",
    ),
    (
        "matern.lambda_s_m",
        "40000",
        "strike correlation length (m)",
    ),
    ("matern.lambda_d_m", "45000", "dip correlation length (m)"),
    ("matern.gamma_sq", "1", "Matern variance"),
    ("sampler.samples", "20000", "retained draws per chain"),
    (
        "sampler.burn_in",
        "",
        "discarded iterations; default samples/10",
    ),
    ("sampler.thin", "1", "iterations per retained draw"),
    ("sampler.seed", "1", "chain seed (overridden by --seed)"),
    (
        "sampler.chains",
        "1",
        "independent chains, seeds seed..seed+chains-1",
    ),
    (
        "sampler.mixing",
        "0.5",
        "probability of an eigenvector move",
    ),
    (
        "sampler.beta_a",
        "2",
        "Beta shape a for the direction exponent",
    ),
    (
        "sampler.beta_b",
        "9",
        "Beta shape b for the direction exponent",
    ),
    ("hyper.a", "1", "Inverse-Gamma shape for sigma^2"),
    ("hyper.b", "1", "Inverse-Gamma scale for sigma^2"),
    ("hyper.a_beta", "1", "Inverse-Gamma shape for sigma_beta^2"),
    ("hyper.b_beta", "1", "Inverse-Gamma scale for sigma_beta^2"),
    (
        "hyper.joint",
        "false",
        "also optimize sigma^2 (otherwise fixed at 1)",
    ),
    (
        "hyper.grid_lo",
        "1e-8",
        "log grid lower end for sigma_beta^2",
    ),
    (
        "hyper.grid_hi",
        "1e2",
        "log grid upper end for sigma_beta^2",
    ),
    ("hyper.grid_points", "50", "log grid size for sigma_beta^2"),
    (
        "hyper.sigma_grid_lo",
        "1e-2",
        "log grid lower end for sigma^2",
    ),
    (
        "hyper.sigma_grid_hi",
        "1e2",
        "log grid upper end for sigma^2",
    ),
    ("hyper.sigma_grid_points", "41", "log grid size for sigma^2"),
    (
        "dic.grid",
        "",
        "correlation lengths in km, e.g. lambda_s=30:45:5,lambda_d=42:50:4",
    ),
    (
        "dic.per_cell_seeds",
        "false",
        "use seed+k for cell k instead of one shared seed",
    ),
    ("mw.rigidity_pa", "32e9", "shear modulus (Pa)"),
    (
        "mw.slip_floor_m",
        "0.01",
        "minimum slip counted in the rupture area (m)",
    ),
    (
        "simulate.pin_subfault",
        "0",
        "index of the subfault whose slip is fixed",
    ),
    (
        "simulate.pin_component",
        "dip",
        "fixed component: strike or dip",
    ),
    ("simulate.pin_value", "0.3", "fixed slip value (m)"),
    (
        "simulate.burn_in",
        "20000",
        "prior-chain iterations before the synthetic draw",
    ),
    (
        "simulate.noise_scale",
        "1",
        "multiplier on the noise sigmas; 0 gives exact data",
    ),
    (
        "simulate.kernel_decay_m",
        "",
        "use the synthetic distance-decay kernel with this length",
    ),
];

pub fn is_known_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

const PATH_KEYS: &[&str] = &[
    "paths.mesh",
    "paths.stations",
    "paths.greens",
    "paths.observations",
    "paths.draws",
    "paths.map_slip",
    "paths.out",
];

/// Parses config text into raw key-value pairs, rejecting unknown or
/// repeated keys.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = key.trim();
        if !is_known_key(key) {
            return Err(CliError::Usage(format!(
                "unknown config key {key:?} at line {}",
                n + 1
            )));
        }
        if out
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(CliError::Usage(format!(
                "config key {key:?} repeated at line {}",
                n + 1
            )));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipComponent {
    Strike,
    Dip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub pin_subfault: usize,
    pub pin_component: SlipComponent,
    pub pin_value: f64,
    pub burn_in: usize,
    pub noise_scale: f64,
    pub kernel_decay_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub mesh: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub greens: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub draws: Option<PathBuf>,
    pub map_slip: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub paths: Paths,
    pub prior: PriorSpec,
    /// `prior.sigma_beta_sq = auto`.
    pub optimize_sigma_beta: bool,
    pub matern: MaternParams,
    pub noise_sigmas: [f64; 3],
    pub sampler: SamplerConfig,
    pub chains: usize,
    pub hyper: HyperPriors,
    pub hyper_joint: bool,
    pub hyper_grid: LogGrid,
    pub hyper_sigma_grid: LogGrid,
    pub dic_grid: Option<GridSpec>,
    pub dic_per_cell_seeds: bool,
    pub magnitude: MagnitudeParams,
    pub simulate: SimulateConfig,
    /// Every key with its effective value, as echoed to the manifest.
    pub entries: BTreeMap<String, String>,
}

struct Values<'a>(&'a BTreeMap<String, String>);

impl Values<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn bad(key: &str, value: &str, what: &str) -> CliError {
        CliError::Usage(format!("config key {key}: expected {what}, got {value:?}"))
    }

    fn f64(&self, key: &str) -> CliResult<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Self::bad(key, v, "a finite number"))
    }

    fn usize(&self, key: &str) -> CliResult<usize> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| Self::bad(key, v, "a non-negative integer"))
    }

    fn u64(&self, key: &str) -> CliResult<u64> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| Self::bad(key, v, "a non-negative integer"))
    }

    fn bool(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(Self::bad(key, v, "true or false")),
        }
    }

    fn pair(&self, key: &str) -> CliResult<(f64, f64)> {
        let v = self.raw(key);
        let parts: Vec<f64> = v
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Self::bad(key, v, "lo,hi"))?;
        match parts.as_slice() {
            [a, b] if a < b => Ok((*a, *b)),
            _ => Err(Self::bad(key, v, "lo,hi with lo < hi")),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }
}

impl RunConfig {
    /// Defaults overlaid by `given`; relative paths joined to `base_dir`.
    pub fn from_entries(given: &BTreeMap<String, String>, base_dir: &Path) -> CliResult<Self> {
        let mut entries: BTreeMap<String, String> = KEYS
            .iter()
            .map(|(k, d, _)| (k.to_string(), d.to_string()))
            .collect();
        for (k, v) in given {
            if !is_known_key(k) {
                return Err(CliError::Usage(format!("unknown config key {k:?}")));
            }
            entries.insert(k.clone(), v.clone());
        }
        for key in PATH_KEYS {
            let v = &entries[*key];
            if !v.is_empty() && Path::new(v).is_relative() {
                let joined = base_dir.join(v);
                entries.insert(key.to_string(), joined.display().to_string());
            }
        }
        Self::build(entries)
    }

    fn build(entries: BTreeMap<String, String>) -> CliResult<Self> {
        let v = Values(&entries);
        let sigma_beta = v.raw("prior.sigma_beta_sq");
        let optimize_sigma_beta = sigma_beta == "auto";
        let prior = PriorSpec {
            beta_s: v.f64("prior.beta_s")?,
            beta_d: v.f64("prior.beta_d")?,
            z_lim: v.f64("prior.z_lim_m")?,
            bounds_s: v.pair("prior.bounds_s")?,
            bounds_d: v.pair("prior.bounds_d")?,
            sigma_beta_sq: if optimize_sigma_beta {
                1.0
            } else {
                v.f64("prior.sigma_beta_sq")?
            },
        };
        prior
            .validate()
            .map_err(|e| CliError::Usage(format!("prior: {e}")))?;
        let matern = MaternParams {
            lambda_s: v.f64("matern.lambda_s_m")?,
            lambda_d: v.f64("matern.lambda_d_m")?,
            gamma_sq: v.f64("matern.gamma_sq")?,
        };
        matern
            .validate()
            .map_err(|e| CliError::Usage(format!("matern: {e}")))?;
        let noise_sigmas = [
            v.f64("noise.sigma_x")?,
            v.f64("noise.sigma_y")?,
            v.f64("noise.sigma_z")?,
        ];
        // zero is allowed for noise-free simulation; inversion needs positive sigmas
        if noise_sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(CliError::Usage(format!(
                "noise: sigmas must be non-negative, got {noise_sigmas:?}"
            )));
        }
        let samples = v.usize("sampler.samples")?;
        let sampler = SamplerConfig {
            sample_count: samples,
            burn_in: if v.raw("sampler.burn_in").is_empty() {
                samples / 10
            } else {
                v.usize("sampler.burn_in")?
            },
            thin: v.usize("sampler.thin")?,
            seed: v.u64("sampler.seed")?,
            mixing_probability: v.f64("sampler.mixing")?,
            beta_shape: (v.f64("sampler.beta_a")?, v.f64("sampler.beta_b")?),
        };
        sampler
            .validate()
            .map_err(|e| CliError::Usage(format!("sampler: {e}")))?;
        let chains = v.usize("sampler.chains")?;
        if chains == 0 {
            return Err(CliError::Usage(
                "config key sampler.chains: must be at least 1".into(),
            ));
        }
        let hyper = HyperPriors {
            a: v.f64("hyper.a")?,
            b: v.f64("hyper.b")?,
            a_beta: v.f64("hyper.a_beta")?,
            b_beta: v.f64("hyper.b_beta")?,
        };
        hyper
            .validate()
            .map_err(|e| CliError::Usage(format!("hyper: {e}")))?;
        let grid = |lo: &str, hi: &str, n: &str| -> CliResult<LogGrid> {
            let g = LogGrid {
                lo: v.f64(lo)?,
                hi: v.f64(hi)?,
                points: v.usize(n)?,
            };
            g.validate()
                .map_err(|e| CliError::Usage(format!("{lo}/{hi}/{n}: {e}")))?;
            Ok(g)
        };
        let hyper_grid = grid("hyper.grid_lo", "hyper.grid_hi", "hyper.grid_points")?;
        let hyper_sigma_grid = grid(
            "hyper.sigma_grid_lo",
            "hyper.sigma_grid_hi",
            "hyper.sigma_grid_points",
        )?;
        let dic_grid = match v.raw("dic.grid") {
            "" => None,
            text => Some(parse_grid_spec(text)?),
        };
        let magnitude = MagnitudeParams {
            rigidity: v.f64("mw.rigidity_pa")?,
            slip_floor: v.f64("mw.slip_floor_m")?,
        };
        magnitude
            .validate()
            .map_err(|e| CliError::Usage(format!("mw: {e}")))?;
        let pin_component = match v.raw("simulate.pin_component") {
            "strike" => SlipComponent::Strike,
            "dip" => SlipComponent::Dip,
            other => {
                return Err(Values::bad(
                    "simulate.pin_component",
                    other,
                    "strike or dip",
                ))
            }
        };
        let noise_scale = v.f64("simulate.noise_scale")?;
        if noise_scale < 0.0 {
            return Err(Values::bad(
                "simulate.noise_scale",
                v.raw("simulate.noise_scale"),
                "a non-negative number",
            ));
        }
        let simulate = SimulateConfig {
            pin_subfault: v.usize("simulate.pin_subfault")?,
            pin_component,
            pin_value: v.f64("simulate.pin_value")?,
            burn_in: v.usize("simulate.burn_in")?,
            noise_scale,
            kernel_decay_m: match v.raw("simulate.kernel_decay_m") {
                "" => None,
                raw => {
                    let d = v.f64("simulate.kernel_decay_m")?;
                    if d <= 0.0 {
                        return Err(Values::bad(
                            "simulate.kernel_decay_m",
                            raw,
                            "a positive length",
                        ));
                    }
                    Some(d)
                }
            },
        };
        let paths = Paths {
            mesh: v.path("paths.mesh"),
            stations: v.path("paths.stations"),
            greens: v.path("paths.greens"),
            observations: v.path("paths.observations"),
            draws: v.path("paths.draws"),
            map_slip: v.path("paths.map_slip"),
            out: v.path("paths.out").unwrap_or_else(|| PathBuf::from("out")),
        };
        Ok(Self {
            paths,
            prior,
            optimize_sigma_beta,
            matern,
            noise_sigmas,
            sampler,
            chains,
            hyper,
            hyper_joint: v.bool("hyper.joint")?,
            hyper_grid,
            hyper_sigma_grid,
            dic_grid,
            dic_per_cell_seeds: v.bool("dic.per_cell_seeds")?,
            magnitude,
            simulate,
            entries,
        })
    }

    /// Applies `--seed` and `--out`, keeping the echoed entries in sync.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<&Path>) -> Self {
        if let Some(s) = seed {
            self.sampler.seed = s;
            self.entries.insert("sampler.seed".into(), s.to_string());
        }
        if let Some(o) = out {
            let o = std::path::absolute(o).unwrap_or_else(|_| o.to_path_buf());
            self.paths.out = o.clone();
            self.entries
                .insert("paths.out".into(), o.display().to_string());
        }
        self
    }

    pub fn require<'a>(path: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
        path.as_deref().ok_or_else(|| {
            CliError::Usage(format!("config key {key} is required for this command"))
        })
    }
}

/// Human-readable key listing for `--help`.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (key = value, # comments):\n");
    for (k, d, h) in KEYS {
        let default = if d.is_empty() {
            "unset".to_string()
        } else {
            d.to_string()
        };
        s.push_str(&format!("  {k:<26} {h} [default: {default}]\n"));
    }
    s
}
