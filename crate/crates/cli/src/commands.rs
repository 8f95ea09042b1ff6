//! Subcommand implementations. Each returns the files it wrote, relative to
//! the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use slipinv::geometry::{
    fmt_f64, load_fault_mesh, load_observations, load_stations, save_observations,
};
use slipinv::greens::{load_greens, save_greens, synthetic_kernel};
use slipinv::hyperopt::{
    optimize_both, optimize_sigma_beta, HyperPriors, LogGrid, MarginalObjective,
};
use slipinv::model_selection::{dic_from_draws, dic_grid_search, DicSummary, InversionInputs};
use slipinv::posterior::build_posterior;
use slipinv::postproc::{
    default_ridge, map_estimate, mle_estimate, mw_posterior, pointwise_cv, pointwise_median,
    predictive_residuals, slip_magnitudes, MwPosterior,
};
use slipinv::prior::Prior;
use slipinv::sampler::{conditional_mtn, insert_coordinate, run_chain, run_chains, ChainResult};
use slipinv::stats;
use slipinv::{
    Draws, FaultMesh, GreensMatrix, LikelihoodSpec, ObservationVector, SamplerConfig, StationSet,
};

use crate::config::{RunConfig, SlipComponent};
use crate::error::{CliError, CliResult};
use crate::files::{read_slip_csv, write_json, write_slip_csv, Manifest, MANIFEST_NAME};
use crate::heatmap::render_heatmap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Invert,
    DicScan,
    Hyperopt,
    Mw,
    Summarize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Invert => "invert",
            Command::DicScan => "dic-scan",
            Command::Hyperopt => "hyperopt",
            Command::Mw => "mw",
            Command::Summarize => "summarize",
        }
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let p = self.path(name);
        write_json(&p, value)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let p = self.path(name);
        let io = |e: csv::Error| CliError::io(&p, std::io::Error::other(e.to_string()));
        let mut w = csv::Writer::from_path(&p).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))
    }
}

/// Runs `command` and writes `run_manifest.json` last. Returns every file
/// written, manifest included.
pub fn run(command: Command, cfg: &RunConfig, threads: Option<usize>) -> CliResult<Vec<String>> {
    let mut out = Outputs::new(&cfg.paths.out)?;
    match command {
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Invert => invert(cfg, &mut out)?,
        Command::DicScan => dic_scan(cfg, &mut out)?,
        Command::Hyperopt => hyperopt(cfg, &mut out)?,
        Command::Mw => mw(cfg, &mut out)?,
        Command::Summarize => summarize(cfg, &mut out)?,
    }
    let mut files = out.files.clone();
    files.push(MANIFEST_NAME.to_string());
    let manifest = Manifest {
        tool: "slipinv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        seed: cfg.sampler.seed,
        threads,
        config: cfg.entries.clone(),
        outputs: files.clone(),
    };
    write_json(&cfg.paths.out.join(MANIFEST_NAME), &manifest)?;
    Ok(files)
}

fn mesh_of(cfg: &RunConfig) -> CliResult<FaultMesh> {
    Ok(load_fault_mesh(RunConfig::require(
        &cfg.paths.mesh,
        "paths.mesh",
    )?)?)
}

fn stations_of(cfg: &RunConfig) -> CliResult<StationSet> {
    Ok(load_stations(RunConfig::require(
        &cfg.paths.stations,
        "paths.stations",
    )?)?)
}

fn greens_of(cfg: &RunConfig, mesh: &FaultMesh, stations: &StationSet) -> CliResult<GreensMatrix> {
    let x =
        match (&cfg.paths.greens, cfg.simulate.kernel_decay_m) {
            (Some(p), _) => load_greens(p)?,
            (None, Some(decay)) => synthetic_kernel(mesh, stations, decay)?,
            (None, None) => return Err(CliError::Usage(
                "config key paths.greens (or simulate.kernel_decay_m) is required for this command"
                    .into(),
            )),
        };
    x.check_consistent(mesh, stations)?;
    Ok(x)
}

struct Problem {
    mesh: FaultMesh,
    stations: StationSet,
    x: GreensMatrix,
    obs: ObservationVector,
    likelihood: LikelihoodSpec,
}

fn problem_of(cfg: &RunConfig) -> CliResult<Problem> {
    let mesh = mesh_of(cfg)?;
    let stations = stations_of(cfg)?;
    let x = greens_of(cfg, &mesh, &stations)?;
    let obs = load_observations(
        RunConfig::require(&cfg.paths.observations, "paths.observations")?,
        &stations,
        cfg.noise_sigmas,
    )?;
    let likelihood = LikelihoodSpec::from(&obs);
    Ok(Problem {
        mesh,
        stations,
        x,
        obs,
        likelihood,
    })
}

fn component_offset(c: SlipComponent) -> usize {
    match c {
        SlipComponent::Strike => 0,
        SlipComponent::Dip => 1,
    }
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    seed: u64,
    pinned_subfault: &'a str,
    pinned_component: &'static str,
    pinned_value_m: f64,
    sigma_beta_sq: f64,
    noise_sigmas_m: [f64; 3],
    noise_scale: f64,
    synthetic_kernel_decay_m: Option<f64>,
    true_mw: Option<f64>,
}

fn simulate(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    if cfg.optimize_sigma_beta {
        return Err(CliError::Usage(
            "simulate needs a numeric prior.sigma_beta_sq".into(),
        ));
    }
    let mesh = mesh_of(cfg)?;
    let stations = stations_of(cfg)?;
    let x = greens_of(cfg, &mesh, &stations)?;
    let sim = &cfg.simulate;
    if sim.pin_subfault >= mesh.len() {
        return Err(CliError::Usage(format!(
            "simulate.pin_subfault = {} but the mesh has {} subfaults",
            sim.pin_subfault,
            mesh.len()
        )));
    }
    let index = 2 * sim.pin_subfault + component_offset(sim.pin_component);
    let prior = Prior::build(&mesh, &cfg.matern, &cfg.prior)?;
    let conditional = conditional_mtn(&prior.as_mtn()?, index, sim.pin_value)?;
    let chain_cfg = SamplerConfig {
        sample_count: 1,
        burn_in: sim.burn_in,
        ..SamplerConfig {
            seed: cfg.sampler.seed,
            ..cfg.sampler
        }
    };
    let chain = run_chain(&conditional, &chain_cfg)?;
    let slip = insert_coordinate(chain.draws.row(0), index, sim.pin_value);

    // stream 1 keeps the noise independent of the chain, which uses stream 0
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.sampler.seed);
    rng.set_stream(1);
    let clean = x.apply(&slip)?;
    let noisy = DVector::from_fn(clean.len(), |k, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        clean[k] + sim.noise_scale * cfg.noise_sigmas[k % 3] * z
    });
    // sigmas are not persisted with the observations
    let obs = ObservationVector::new(noisy, [1.0; 3])?;

    write_slip_csv(&out.path("true_slip.csv"), &mesh, &slip)?;
    save_observations(&obs, &stations, out.path("observations.csv"))?;
    if cfg.paths.greens.is_none() {
        save_greens(&x, out.path("greens.csv"))?;
    }
    let meta = SimulateMeta {
        seed: cfg.sampler.seed,
        pinned_subfault: &mesh.ids()[sim.pin_subfault],
        pinned_component: match sim.pin_component {
            SlipComponent::Strike => "strike",
            SlipComponent::Dip => "dip",
        },
        pinned_value_m: sim.pin_value,
        sigma_beta_sq: cfg.prior.sigma_beta_sq,
        noise_sigmas_m: cfg.noise_sigmas,
        noise_scale: sim.noise_scale,
        synthetic_kernel_decay_m: cfg
            .paths
            .greens
            .is_none()
            .then_some(sim.kernel_decay_m)
            .flatten(),
        true_mw: slipinv::postproc::moment_magnitude(slip.as_slice(), &mesh, &cfg.magnitude).ok(),
    };
    out.json("simulate.json", &meta)
}

#[derive(Serialize)]
struct HyperoptChoice {
    value: f64,
    at_boundary: bool,
}

/// `σ_β²` at σ² = 1 with the noise precision taken from the data sigmas.
fn choose_sigma_beta(
    cfg: &RunConfig,
    p: &Problem,
    prior: &Prior,
) -> CliResult<(f64, Option<HyperoptChoice>)> {
    if !cfg.optimize_sigma_beta {
        return Ok((cfg.prior.sigma_beta_sq, None));
    }
    let obj =
        MarginalObjective::known_noise(p.obs.values(), &p.x, &p.likelihood, &prior.a0, cfg.hyper)?;
    let opt = optimize_sigma_beta(&obj, 1.0, &cfg.hyper_grid)?;
    Ok((
        opt.sigma_beta_sq,
        Some(HyperoptChoice {
            value: opt.value,
            at_boundary: opt.at_boundary,
        }),
    ))
}

fn chain_seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.chains as u64)
        .map(|k| cfg.sampler.seed.wrapping_add(k))
        .collect()
}

fn concatenate(chains: &[ChainResult]) -> Draws {
    let dim = chains[0].draws.dim();
    let mut all = Draws::with_capacity(dim, chains.iter().map(|c| c.draws.len()).sum());
    for c in chains {
        for r in c.draws.rows() {
            all.push(r);
        }
    }
    all
}

#[derive(Serialize)]
struct ChainInfo {
    seed: u64,
    steps: u64,
    eigen_moves: u64,
    covcol_moves: u64,
    min_ess: f64,
}

#[derive(Serialize)]
struct InversionSummary {
    lambda_s_m: f64,
    lambda_d_m: f64,
    sigma_beta_sq: f64,
    sigma_beta_sq_optimization: Option<HyperoptChoice>,
    draws: usize,
    chains: Vec<ChainInfo>,
    dic: DicSummary,
    mle_ridge: f64,
}

#[derive(Serialize)]
struct MwSummary {
    count: usize,
    excluded: usize,
    median: f64,
    q025: f64,
    q975: f64,
    at_median_slip: Option<f64>,
    at_map: Option<f64>,
    rigidity_pa: f64,
    slip_floor_m: f64,
}

fn mw_summary(m: &MwPosterior, cfg: &RunConfig) -> MwSummary {
    MwSummary {
        count: m.values.len(),
        excluded: m.excluded,
        median: m.median,
        q025: m.q025,
        q975: m.q975,
        at_median_slip: m.at_median_slip,
        at_map: m.at_map,
        rigidity_pa: cfg.magnitude.rigidity,
        slip_floor_m: cfg.magnitude.slip_floor,
    }
}

fn cv_field(draws: &Draws) -> CliResult<Vec<Option<f64>>> {
    Ok(pointwise_cv(draws)?)
}

fn write_median_cv(
    out: &mut Outputs,
    mesh: &FaultMesh,
    median: &DVector<f64>,
    cv: &[Option<f64>],
) -> CliResult<()> {
    let mags = slip_magnitudes(median.as_slice());
    let rows: Vec<Vec<String>> = mesh
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            vec![
                id.clone(),
                fmt_f64(median[2 * i]),
                fmt_f64(median[2 * i + 1]),
                fmt_f64(mags[i]),
                cv[i].map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv(
        "median_cv.csv",
        &[
            "id",
            "median_d_s_m",
            "median_d_d_m",
            "median_slip_m",
            "cv_percent",
        ],
        &rows,
    )
}

fn write_maps(
    out: &mut Outputs,
    mesh: &FaultMesh,
    stations: Option<&StationSet>,
    maps: &[(&str, &str, Vec<f64>)],
) -> CliResult<()> {
    for (name, title, values) in maps {
        let svg = render_heatmap(title, values, mesh, stations)?;
        out.text(name, &svg)?;
    }
    Ok(())
}

fn invert(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    let p = problem_of(cfg)?;
    let prior = Prior::build(&p.mesh, &cfg.matern, &cfg.prior)?;
    let (sigma_beta_sq, choice) = choose_sigma_beta(cfg, &p, &prior)?;
    let spec = slipinv::PriorSpec {
        sigma_beta_sq,
        ..cfg.prior
    };
    let y = p.obs.values();
    let post = build_posterior(y, &p.x, &p.likelihood, &prior.a0, &spec)?;
    let seeds = chain_seeds(cfg);
    let chains = if seeds.len() == 1 {
        vec![run_chain(&post, &cfg.sampler)?]
    } else {
        run_chains(&post, &cfg.sampler, &seeds)?
    };
    let draws = concatenate(&chains);
    if draws.is_empty() {
        return Err(CliError::Core(slipinv::Error::EmptyChain));
    }

    let median = pointwise_median(&draws)?;
    let cv = cv_field(&draws)?;
    let map = map_estimate(&post)?;
    let ridge = default_ridge(&p.x, &p.likelihood);
    let mle = mle_estimate(y, &p.x, &p.likelihood, ridge)?;
    let resid = predictive_residuals(&draws, y, &p.x)?;
    let mw = mw_posterior(&draws, &p.mesh, &cfg.magnitude, Some(&map))?;
    let dic = dic_from_draws(&draws, y, &p.x, &p.likelihood)?;

    draws.save_binary(&out.path("draws.f64"))?;
    out.files.push("draws.json".into());
    write_median_cv(out, &p.mesh, &median, &cv)?;
    let rows: Vec<Vec<String>> = p
        .mesh
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            vec![
                id.clone(),
                fmt_f64(map[2 * i]),
                fmt_f64(map[2 * i + 1]),
                fmt_f64(mle[2 * i]),
                fmt_f64(mle[2 * i + 1]),
            ]
        })
        .collect();
    out.csv(
        "point_estimates.csv",
        &["id", "map_d_s_m", "map_d_d_m", "mle_d_s_m", "mle_d_d_m"],
        &rows,
    )?;
    let axes = ["x", "y", "z"];
    let rows: Vec<Vec<String>> = (0..y.len())
        .map(|k| {
            vec![
                p.stations.labels()[k / 3].clone(),
                axes[k % 3].to_string(),
                fmt_f64(y[k]),
                fmt_f64(resid.q025[k]),
                fmt_f64(resid.q50[k]),
                fmt_f64(resid.q975[k]),
            ]
        })
        .collect();
    out.csv(
        "residuals.csv",
        &["station", "axis", "observed_m", "q025_m", "q50_m", "q975_m"],
        &rows,
    )?;
    out.json("mw_summary.json", &mw_summary(&mw, cfg))?;
    let summary = InversionSummary {
        lambda_s_m: cfg.matern.lambda_s,
        lambda_d_m: cfg.matern.lambda_d,
        sigma_beta_sq,
        sigma_beta_sq_optimization: choice,
        draws: draws.len(),
        chains: chains
            .iter()
            .map(|c| ChainInfo {
                seed: c.seed,
                steps: c.steps,
                eigen_moves: c.eigen_moves,
                covcol_moves: c.covcol_moves,
                min_ess: c.min_ess(),
            })
            .collect(),
        dic,
        mle_ridge: ridge,
    };
    out.json("inversion.json", &summary)?;
    let cv_values: Vec<f64> = cv.iter().map(|c| c.unwrap_or(f64::NAN)).collect();
    write_maps(
        out,
        &p.mesh,
        Some(&p.stations),
        &[
            (
                "slip_median.svg",
                "median slip (m)",
                slip_magnitudes(median.as_slice()),
            ),
            ("slip_cv.svg", "coefficient of variation (%)", cv_values),
            (
                "slip_map.svg",
                "MAP slip (m)",
                slip_magnitudes(map.as_slice()),
            ),
        ],
    )
}

#[derive(Serialize)]
struct DicArgmin {
    lambda_s_m: Option<f64>,
    lambda_d_m: Option<f64>,
    dic: Option<f64>,
    cells: usize,
    invalid: Vec<InvalidCell>,
}

#[derive(Serialize)]
struct InvalidCell {
    lambda_s_m: f64,
    lambda_d_m: f64,
    error: String,
}

fn dic_scan(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    let grid = cfg
        .dic_grid
        .as_ref()
        .ok_or_else(|| CliError::Usage("config key dic.grid is required for dic-scan".into()))?;
    let p = problem_of(cfg)?;
    let cells = grid.cells();
    let seeds: Option<Vec<u64>> = cfg.dic_per_cell_seeds.then(|| {
        (0..cells.len() as u64)
            .map(|k| cfg.sampler.seed.wrapping_add(k))
            .collect()
    });
    let inputs = InversionInputs {
        mesh: &p.mesh,
        y: p.obs.values(),
        x: &p.x,
        likelihood: &p.likelihood,
        prior: &cfg.prior,
        gamma_sq: cfg.matern.gamma_sq,
    };
    if cfg.optimize_sigma_beta {
        return Err(CliError::Usage(
            "dic-scan needs a numeric prior.sigma_beta_sq".into(),
        ));
    }
    let table = dic_grid_search(&inputs, &cells, &cfg.sampler, seeds.as_deref())?;
    let rows: Vec<Vec<String>> = table
        .cells
        .iter()
        .map(|c| {
            let (dic, pd, md) = match &c.outcome {
                Ok(s) => (fmt_f64(s.dic), fmt_f64(s.p_d), fmt_f64(s.mean_deviance)),
                Err(_) => (String::new(), String::new(), String::new()),
            };
            vec![
                fmt_f64(c.lambda_s),
                fmt_f64(c.lambda_d),
                dic,
                pd,
                md,
                c.seed.to_string(),
            ]
        })
        .collect();
    out.csv(
        "dic_table.csv",
        &[
            "lambda_s_m",
            "lambda_d_m",
            "dic",
            "p_d",
            "mean_deviance",
            "seed",
        ],
        &rows,
    )?;
    let best = table.best();
    let argmin = DicArgmin {
        lambda_s_m: best.map(|c| c.lambda_s),
        lambda_d_m: best.map(|c| c.lambda_d),
        dic: best.and_then(|c| c.dic()),
        cells: table.cells.len(),
        invalid: table
            .cells
            .iter()
            .filter_map(|c| {
                c.outcome.as_ref().err().map(|e| InvalidCell {
                    lambda_s_m: c.lambda_s,
                    lambda_d_m: c.lambda_d,
                    error: e.clone(),
                })
            })
            .collect(),
    };
    out.json("dic_argmin.json", &argmin)
}

#[derive(Serialize)]
struct HyperoptOptimum {
    mode: &'static str,
    sigma_sq: f64,
    sigma_beta_sq: f64,
    value: f64,
    at_boundary: bool,
    priors: HyperPriors,
    sigma_beta_grid: LogGrid,
    sigma_grid: Option<LogGrid>,
}

fn hyperopt(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    let p = problem_of(cfg)?;
    let prior = Prior::build(&p.mesh, &cfg.matern, &cfg.prior)?;
    let obj =
        MarginalObjective::known_noise(p.obs.values(), &p.x, &p.likelihood, &prior.a0, cfg.hyper)?;
    let (optimum, rows): (HyperoptOptimum, Vec<Vec<String>>) = if cfg.hyper_joint {
        let o = optimize_both(&obj, &cfg.hyper_sigma_grid, &cfg.hyper_grid)?;
        let rows = o
            .grid
            .iter()
            .map(|&(s, b, v)| vec![fmt_f64(s), fmt_f64(b), fmt_f64(v)])
            .collect();
        (
            HyperoptOptimum {
                mode: "joint",
                sigma_sq: o.sigma_sq,
                sigma_beta_sq: o.sigma_beta_sq,
                value: o.value,
                at_boundary: o.at_boundary,
                priors: cfg.hyper,
                sigma_beta_grid: cfg.hyper_grid,
                sigma_grid: Some(cfg.hyper_sigma_grid),
            },
            rows,
        )
    } else {
        let o = optimize_sigma_beta(&obj, 1.0, &cfg.hyper_grid)?;
        let rows = o
            .grid
            .iter()
            .map(|&(b, v)| vec![fmt_f64(1.0), fmt_f64(b), fmt_f64(v)])
            .collect();
        (
            HyperoptOptimum {
                mode: "known_noise",
                sigma_sq: 1.0,
                sigma_beta_sq: o.sigma_beta_sq,
                value: o.value,
                at_boundary: o.at_boundary,
                priors: cfg.hyper,
                sigma_beta_grid: cfg.hyper_grid,
                sigma_grid: None,
            },
            rows,
        )
    };
    out.csv(
        "hyperopt_grid.csv",
        &["sigma_sq", "sigma_beta_sq", "objective"],
        &rows,
    )?;
    out.json("hyperopt_optimum.json", &optimum)
}

fn draws_of(cfg: &RunConfig) -> CliResult<Draws> {
    let path = cfg
        .paths
        .draws
        .clone()
        .unwrap_or_else(|| cfg.paths.out.join("draws.f64"));
    if path.extension().is_some_and(|e| e == "f64") {
        Ok(Draws::load_binary(&path)?)
    } else {
        let f = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Draws::from_csv_reader(f, &path.display().to_string())?)
    }
}

fn check_dim(draws: &Draws, mesh: &FaultMesh) -> CliResult<()> {
    if draws.dim() != mesh.slip_dim() {
        return Err(CliError::Core(slipinv::Error::Shape(format!(
            "draws have dimension {}, mesh needs {}",
            draws.dim(),
            mesh.slip_dim()
        ))));
    }
    Ok(())
}

fn mw(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    let mesh = mesh_of(cfg)?;
    let draws = draws_of(cfg)?;
    check_dim(&draws, &mesh)?;
    let map = cfg
        .paths
        .map_slip
        .as_deref()
        .map(|p| read_slip_csv(p, &mesh))
        .transpose()?;
    let m = mw_posterior(&draws, &mesh, &cfg.magnitude, map.as_ref())?;
    let rows: Vec<Vec<String>> = m.values.iter().map(|v| vec![fmt_f64(*v)]).collect();
    out.csv("mw_draws.csv", &["mw"], &rows)?;
    out.json("mw_summary.json", &mw_summary(&m, cfg))
}

#[derive(Serialize)]
struct DrawsSummary {
    draws: usize,
    dim: usize,
    min_ess: f64,
}

fn summarize(cfg: &RunConfig, out: &mut Outputs) -> CliResult<()> {
    let mesh = mesh_of(cfg)?;
    let stations = cfg.paths.stations.as_ref().map(load_stations).transpose()?;
    let draws = draws_of(cfg)?;
    check_dim(&draws, &mesh)?;
    if draws.is_empty() {
        return Err(CliError::Core(slipinv::Error::EmptyChain));
    }
    let mut rows = Vec::with_capacity(draws.dim());
    let mut min_ess = f64::INFINITY;
    for j in 0..draws.dim() {
        let col = draws.column(j);
        let sorted = stats::sorted(&col);
        let d = slipinv::diagnostics::CoordinateDiagnostics::of(&col);
        if !d.ess.is_nan() {
            min_ess = min_ess.min(d.ess);
        }
        rows.push(vec![
            j.to_string(),
            mesh.ids()[j / 2].clone(),
            if j % 2 == 0 { "strike" } else { "dip" }.to_string(),
            fmt_f64(stats::mean(&col)),
            fmt_f64(stats::quantile_sorted(&sorted, 0.5)),
            fmt_f64(stats::quantile_sorted(&sorted, 0.025)),
            fmt_f64(stats::quantile_sorted(&sorted, 0.975)),
            fmt_f64(d.ess),
            fmt_f64(d.iat),
        ]);
    }
    out.csv(
        "coordinate_summary.csv",
        &[
            "index",
            "id",
            "component",
            "mean_m",
            "median_m",
            "q025_m",
            "q975_m",
            "ess",
            "iat",
        ],
        &rows,
    )?;
    let median = pointwise_median(&draws)?;
    let cv = cv_field(&draws)?;
    write_median_cv(out, &mesh, &median, &cv)?;
    let cv_values: Vec<f64> = cv.iter().map(|c| c.unwrap_or(f64::NAN)).collect();
    write_maps(
        out,
        &mesh,
        stations.as_ref(),
        &[
            (
                "slip_median.svg",
                "median slip (m)",
                slip_magnitudes(median.as_slice()),
            ),
            ("slip_cv.svg", "coefficient of variation (%)", cv_values),
        ],
    )?;
    out.json(
        "summary.json",
        &DrawsSummary {
            draws: draws.len(),
            dim: draws.dim(),
            min_ess: if min_ess.is_finite() {
                min_ess
            } else {
                f64::NAN
            },
        },
    )
}
