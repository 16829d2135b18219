//! Config-driven batch runs: the six commands behind the `fermion-dynamics`
//! binary, their JSON config schema, output files and run manifest.
//!
//! Config keys: `space{n, interval, weights}`, `kernel{type, params, epsilon,
//! rescale}`, `family{kind, s, mobility}`, `run{T, burn_in, replicas, seed,
//! draws, initial, snapshot_draws, snapshot_time, check_interval}`,
//! `limits{enumeration_max}`. Unknown keys are rejected.
//!
//! Exit codes: 0 success, 1 invalid config or input, 2 invariant failure,
//! 3 numerical abort.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::configuration::Configuration;
use crate::ctmc::{self, InitialState, SimConfig};
use crate::error::Error;
use crate::export::{self, CorrelationRow};
use crate::generator::{self, DirichletForm, SpectralOptions};
use crate::kernel::{build_kernel, InteractionOperator, KernelOperator, KernelOptions, KernelSpec, SiteSpace, WeightRule};
use crate::measure::{self, DppSampler, MeasureTable, DEFAULT_ENUMERATION_LIMIT};
use crate::linalg::SortedEigen;
use crate::papangelou;
use crate::rates::{self, DynamicsKind, MobilitySpec, RateFamily};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "FERMION_DYNAMICS_OUT";
pub const DEFAULT_OUT_DIR: &str = "out";

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const BOUND_TOL: f64 = 1e-9;
pub const CONSERVATION_TOL: f64 = 1e-12;
const MECKE_FUNCTIONS: usize = 50;
const DUALITY_PAIRS: usize = 100;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("invariant suite failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    fn config(key: &str, message: impl fmt::Display) -> Self {
        CliError::Config { key: key.into(), message: message.to_string() }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Invariant(_) => 2,
            CliError::Core(Error::NotReversible { .. }) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Sample,
    Simulate,
    Verify,
    Spectrum,
    Correlations,
    Diagnose,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Sample, Command::Simulate, Command::Verify, Command::Spectrum, Command::Correlations, Command::Diagnose];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Correlations => "correlations",
            Command::Diagnose => "diagnose",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}` (expected sample, simulate, verify, spectrum, correlations or diagnose)"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsConfig {
    Rule(WeightRule),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub n: usize,
    /// Equispaced cell midpoints on `[lo, hi]`; without it sites are labelled
    /// `0..n` with unit weights.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub weights: Option<WeightsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub rescale: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: DynamicsKind,
    pub s: f64,
    /// Kawasaki only; defaults to all pairs with unit mobility.
    #[serde(default)]
    pub mobility: Option<MobilitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub burn_in: f64,
    pub replicas: usize,
    pub seed: u64,
    pub draws: usize,
    pub initial: InitialState,
    pub snapshot_draws: usize,
    pub snapshot_time: f64,
    pub check_interval: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            burn_in: 0.1,
            replicas: 1,
            seed: 0,
            draws: 1000,
            initial: InitialState::DppSample,
            snapshot_draws: 0,
            snapshot_time: 1.0,
            check_interval: ctmc::DEFAULT_CHECK_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub enumeration_max: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { enumeration_max: DEFAULT_ENUMERATION_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub limits: Limits,
}

/// A parsed config together with the digest of its canonical form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// SHA-256 of the config re-serialized with sorted keys and no
    /// whitespace, so reordering keys leaves it unchanged.
    pub digest: String,
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config("config", e))?;
    let canonical = serde_json::to_string(&value).expect("a parsed value serializes");
    let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path == "." { "config" } else { &path }, e.into_inner())
    })?;
    Ok(LoadedConfig { config, digest })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Site space, kernel and interaction operator built from a config.
#[derive(Debug, Clone)]
pub struct Model {
    pub space: SiteSpace,
    pub kernel: KernelOperator,
    pub interaction: InteractionOperator,
}

impl RunConfig {
    pub fn site_space(&self) -> Result<SiteSpace, CliError> {
        let s = &self.space;
        if s.n == 0 {
            return Err(CliError::config("space.n", "must be at least 1"));
        }
        let (rule, explicit) = match &s.weights {
            None => (WeightRule::Uniform, None),
            Some(WeightsConfig::Rule(r)) => (*r, None),
            Some(WeightsConfig::Explicit(w)) => {
                if w.len() != s.n {
                    return Err(CliError::config("space.weights", format!("expected {} weights, got {}", s.n, w.len())));
                }
                (WeightRule::Uniform, Some(w.clone()))
            }
        };
        let base = match s.interval {
            Some([lo, hi]) => SiteSpace::grid(lo, hi, s.n, rule).map_err(|e| CliError::config("space.interval", e))?,
            None => SiteSpace::counting(s.n).map_err(|e| CliError::config("space.n", e))?,
        };
        match explicit {
            Some(w) => SiteSpace::new(base.positions().to_vec(), w).map_err(|e| CliError::config("space.weights", e)),
            None => Ok(base),
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, CliError> {
        let params = match &self.kernel.params {
            serde_json::Value::Null => serde_json::json!({}),
            p => p.clone(),
        };
        let tagged = serde_json::json!({ "type": self.kernel.kind, "params": params });
        serde_path_to_error::deserialize(tagged).map_err(|e| {
            let path = e.path().to_string();
            let key = match path.as_str() {
                "." | "type" => "kernel.type".to_string(),
                p => format!("kernel.{p}"),
            };
            CliError::Config { key, message: e.into_inner().to_string() }
        })
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let space = self.site_space()?;
        let spec = self.kernel_spec()?;
        let mut options = KernelOptions { rescale: self.kernel.rescale, ..KernelOptions::default() };
        if let Some(eps) = self.kernel.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::config("kernel.epsilon", format!("must lie in (0, 1), got {eps}")));
            }
            options.epsilon = eps;
        }
        let kernel = build_kernel(&space, &spec, options).map_err(|e| core_or_config("kernel", e))?;
        let interaction = InteractionOperator::from_kernel(&kernel).map_err(|e| core_or_config("kernel", e))?;
        Ok(Model { space, kernel, interaction })
    }

    pub fn rate_family(&self, n: usize) -> Result<RateFamily, CliError> {
        let f = self.family.as_ref().ok_or_else(|| CliError::config("family", "required by this command"))?;
        if !(0.0..=1.0).contains(&f.s) {
            return Err(CliError::config("family.s", format!("exponent must lie in [0, 1], got {}", f.s)));
        }
        match f.kind {
            DynamicsKind::Glauber => {
                if f.mobility.is_some() {
                    return Err(CliError::config("family.mobility", "only meaningful for kawasaki dynamics"));
                }
                RateFamily::glauber(f.s).map_err(|e| CliError::config("family.s", e))
            }
            DynamicsKind::Kawasaki => {
                let spec = f.mobility.clone().unwrap_or(MobilitySpec::AllPairs { scale: 1.0 });
                let a = spec.build(n).map_err(|e| CliError::config("family.mobility", e))?;
                RateFamily::kawasaki(f.s, a).map_err(|e| CliError::config("family.mobility", e))
            }
        }
    }

    pub fn sim_config(&self, family: RateFamily) -> Result<SimConfig, CliError> {
        let r = &self.run;
        let config = SimConfig {
            family,
            horizon: r.horizon,
            burn_in: r.burn_in,
            replicas: r.replicas,
            master_seed: r.seed,
            initial: r.initial.clone(),
            check_interval: r.check_interval,
            snapshot_draws: r.snapshot_draws,
            snapshot_time: r.snapshot_time,
        };
        config.validate().map_err(|e| {
            let key = match &e {
                Error::InvalidSimConfig(m) if m.starts_with("horizon") => "run.T",
                Error::InvalidSimConfig(m) if m.starts_with("burn_in") => "run.burn_in",
                Error::InvalidSimConfig(m) if m.starts_with("replicas") => "run.replicas",
                Error::InvalidSimConfig(m) if m.starts_with("check_interval") => "run.check_interval",
                _ => "run",
            };
            CliError::config(key, e)
        })?;
        Ok(config)
    }
}

fn core_or_config(key: &str, e: Error) -> CliError {
    if e.is_numerical() {
        CliError::Core(e)
    } else {
        CliError::config(key, e)
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
}

/// Resolves the output directory: explicit flag, then [`OUT_DIR_ENV`], then
/// [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<OutputFile>,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub created_unix: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.files.push(OutputFile { name: name.into(), path });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
            writeln!(w)
        })
    }
}

/// Runs one command and writes its outputs plus `manifest.json` into
/// `out_dir`. An invariant failure still writes every output before
/// returning [`CliError::Invariant`].
pub fn run(command: Command, loaded: &LoadedConfig, overrides: &Overrides, out_dir: &Path) -> Result<RunManifest, CliError> {
    let mut config = loaded.config.clone();
    if let Some(seed) = overrides.seed {
        config.run.seed = seed;
    }
    if let Some(replicas) = overrides.replicas {
        config.run.replicas = replicas;
    }
    let model = config.model()?;
    let mut out = Outputs::new(out_dir)?;
    let outcome = match command {
        Command::Sample => cmd_sample(&config, &model, &mut out),
        Command::Simulate => cmd_simulate(&config, &model, &mut out),
        Command::Verify => cmd_verify(&config, &model, &mut out),
        Command::Spectrum => cmd_spectrum(&config, &model, &mut out),
        Command::Correlations => cmd_correlations(&config, &model, &mut out),
        Command::Diagnose => cmd_diagnose(&config, &model, &mut out),
    };
    let failure = match outcome {
        Ok(()) => None,
        Err(CliError::Invariant(m)) => Some(m),
        Err(e) => return Err(e),
    };
    let manifest = RunManifest {
        command,
        config_digest: loaded.digest.clone(),
        seed: config.run.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs: out.files.clone(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    match failure {
        Some(m) => Err(CliError::Invariant(m)),
        None => Ok(manifest),
    }
}

fn draws(config: &RunConfig, model: &Model) -> Result<Vec<Configuration>, CliError> {
    if config.run.draws == 0 {
        return Err(CliError::config("run.draws", "must be at least 1"));
    }
    let sampler = DppSampler::new(&model.kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
    (0..config.run.draws).map(|_| sampler.sample(&mut rng).map_err(CliError::from)).collect()
}

fn exact_table(config: &RunConfig, model: &Model) -> Result<MeasureTable, CliError> {
    measure::exact_distribution(&model.interaction, config.limits.enumeration_max)
        .map_err(|e| CliError::config("limits.enumeration_max", e))
}

fn cmd_sample(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let samples = draws(config, model)?;
    let n = model.space.len();
    out.write("samples.csv", |w| export::write_samples_csv(w, n, &samples))?;
    out.write("kernel.csv", |w| export::write_matrix_csv(w, model.kernel.matrix()))?;
    out.write("interaction.csv", |w| export::write_matrix_csv(w, model.interaction.matrix()))?;
    Ok(())
}

#[derive(Serialize)]
struct SimulationStats {
    kind: DynamicsKind,
    horizon: f64,
    burn_in: f64,
    replicas: usize,
    events: usize,
    absorbed_replicas: usize,
    refactorizations: usize,
    max_drift: f64,
    occupancy_mean: Vec<f64>,
    occupancy_stderr: Vec<f64>,
    exact_marginals: Option<Vec<f64>>,
    stationarity: Option<ctmc::StationarityReport>,
}

fn cmd_simulate(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let family = config.rate_family(model.space.len())?;
    let sim = config.sim_config(family)?;
    let trajectories = ctmc::simulate_replicas(&sim, &model.interaction)?;
    for (k, t) in trajectories.iter().enumerate() {
        out.write(&format!("trajectory_{k}.csv"), |w| export::write_trajectory_csv(w, t))?;
    }
    let occupancy = trajectories
        .iter()
        .map(|t| ctmc::occupancy_stats(t, sim.burn_in))
        .reduce(|a, b| Ok(a?.merge(b?)))
        .expect("at least one replica")
        .map_err(|e| core_or_config("run", e))?;
    let n = model.space.len();
    let (exact_marginals, stationarity) = if n <= config.limits.enumeration_max {
        let table = exact_table(config, model)?;
        let marginals = (0..n).map(|i| table.marginal(i)).collect();
        (Some(marginals), Some(ctmc::compare_with_measure(&sim, &trajectories, &table)?))
    } else {
        (None, None)
    };
    let stats = SimulationStats {
        kind: sim.kind(),
        horizon: sim.horizon,
        burn_in: sim.burn_in,
        replicas: sim.replicas,
        events: trajectories.iter().map(|t| t.events.len()).sum(),
        absorbed_replicas: trajectories.iter().filter(|t| t.absorbed_at.is_some()).count(),
        refactorizations: trajectories.iter().map(|t| t.refactorizations).sum(),
        max_drift: trajectories.iter().map(|t| t.max_drift).fold(0.0, f64::max),
        occupancy_mean: occupancy.means,
        occupancy_stderr: occupancy.stderr,
        exact_marginals,
        stationarity,
    };
    out.json("stats.json", &stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub kind: DynamicsKind,
    pub s: f64,
    pub sites: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult { name: name.into(), value: Some(value), tolerance, passed: value <= tolerance, note: None }
}

/// Runs the full invariant suite on an enumerable instance.
pub fn verify_suite(
    model: &Model,
    family: &RateFamily,
    table: &MeasureTable,
    seed: u64,
) -> Result<VerifyReport, Error> {
    let j = &model.interaction;
    let n = j.n();
    let states = 1usize << n;
    let w = j.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    checks.push(check("normalization", (table.total() - 1.0).abs(), NORMALIZATION_TOL));

    let diag = model.kernel.diagnostics();
    let mut kernel_check = check("kernel_valid", diag.violations.len() as f64, 0.0);
    if !diag.ok() {
        kernel_check.note = Some(diag.violations.join("; "));
    }
    checks.push(kernel_check);

    let k_eigs = &model.kernel.eigen().values;
    let j_eigs = SortedEigen::new(j.ensemble()).values;
    let eig_map = k_eigs
        .iter()
        .zip(&j_eigs)
        .map(|(&l, &m)| {
            let expected = l.max(0.0) / (1.0 - l);
            (m - expected).abs() / expected.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    checks.push(check("interaction_eigenvalue_map", eig_map, IDENTITY_TOL));

    let marg = (0..n)
        .map(|i| (table.marginal(i) - model.kernel.entry(i, i) * w[i]).abs())
        .fold(0.0, f64::max);
    checks.push(check("one_point_marginals", marg, IDENTITY_TOL));

    let mut density_ratio: f64 = 0.0;
    let mut bound: f64 = f64::NEG_INFINITY;
    let mut balance: f64 = 0.0;
    for mask in 0..states {
        let gamma = Configuration::from_mask(n, mask as u64);
        let profile = papangelou::intensity_profile(j, &gamma);
        for x in gamma.vacant() {
            let up = table.prob((mask | 1 << x) as u64);
            density_ratio = density_ratio.max((up - table.prob(mask as u64) * profile.get(x) * w[x]).abs());
            bound = bound.max(profile.get(x) - j.entry(x, x));
        }
        if family.kind() == DynamicsKind::Kawasaki {
            balance = balance.max(rates::balance_residual(j, &gamma, family)?);
        }
    }
    checks.push(check("density_ratio", density_ratio, IDENTITY_TOL));

    let mut mecke: f64 = 0.0;
    for _ in 0..MECKE_FUNCTIONS {
        let f: Vec<f64> = (0..n * states).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = measure::mecke_check(j, table, |x, g| f[x * states + g.mask() as usize]);
        mecke = mecke.max(r.residual);
    }
    checks.push(check("mecke_identity", mecke, IDENTITY_TOL));
    checks.push(check("papangelou_bound", bound.max(0.0), BOUND_TOL));

    if family.kind() == DynamicsKind::Kawasaki {
        checks.push(check("balance_residual", balance, IDENTITY_TOL));
    } else {
        checks.push(CheckResult {
            name: "balance_residual".into(),
            value: None,
            tolerance: IDENTITY_TOL,
            passed: true,
            note: Some("not applicable to glauber dynamics".into()),
        });
    }

    let q = generator::build_generator(j, family, n)?;
    checks.push(check("conservativity", q.row_sum_residual(), CONSERVATION_TOL));
    checks.push(check("reversibility", generator::reversibility_check(&q, table)?, IDENTITY_TOL));

    let form = DirichletForm::new(j, table, family)?;
    let mut duality: f64 = 0.0;
    let mut negativity: f64 = 0.0;
    for _ in 0..DUALITY_PAIRS {
        let f: Vec<f64> = (0..states).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..states).map(|_| rng.random_range(-1.0..1.0)).collect();
        duality = duality.max((form.eval(&f, &g)? - generator::generator_form(&q, table, &f, &g)?).abs());
        negativity = negativity.max(-form.eval(&f, &f)?);
    }
    checks.push(check("form_duality", duality, IDENTITY_TOL));
    checks.push(check("form_positivity", negativity.max(0.0), 0.0));

    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        kind: family.kind(),
        s: family.s(),
        sites: n,
        checks,
    })
}

fn cmd_verify(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let family = config.rate_family(model.space.len())?;
    let table = exact_table(config, model)?;
    let report = verify_suite(model, &family, &table, config.run.seed)?;
    out.json("verify.json", &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Invariant(report.failures().join(", ")))
    }
}

fn cmd_spectrum(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let family = config.rate_family(model.space.len())?;
    let table = exact_table(config, model)?;
    let q = generator::build_generator(&model.interaction, &family, config.limits.enumeration_max)?;
    out.write("generator.csv", |w| export::write_generator_csv(w, &q))?;
    let options = SpectralOptions { seed: config.run.seed, ..SpectralOptions::default() };
    let report = generator::spectral_analysis(&q, &table, options)?;
    out.json("spectrum.json", &report)
}

/// Estimated first and second correlation functions next to their exact
/// determinantal values.
pub fn correlation_rows(model: &Model, samples: &[Configuration]) -> Result<Vec<CorrelationRow>, Error> {
    let mut rows = Vec::new();
    for order in [1, 2] {
        let table = measure::estimate_correlation(samples, &model.space, order)?;
        for e in table.entries {
            let sites: Vec<usize> = std::iter::once(e.i).chain(e.j).collect();
            rows.push(CorrelationRow {
                order,
                i: e.i,
                j: e.j,
                target: model.kernel.correlation(&sites),
                estimate: e.estimate,
                stderr: e.stderr,
            });
        }
    }
    Ok(rows)
}

fn cmd_correlations(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let samples = draws(config, model)?;
    let rows = correlation_rows(model, &samples)?;
    out.write("correlations.csv", |w| export::write_correlations_csv(w, &rows))
}

#[derive(Serialize)]
struct DiagnoseReport {
    kernel: crate::kernel::KernelDiagnostics,
    mobility_asymmetry: f64,
    conditions: rates::ConditionReport,
}

fn cmd_diagnose(config: &RunConfig, model: &Model, out: &mut Outputs) -> Result<(), CliError> {
    let n = model.space.len();
    let family = config.rate_family(n)?;
    let table = if n <= config.limits.enumeration_max { Some(exact_table(config, model)?) } else { None };
    let conditions = rates::condition_diagnostics(&model.interaction, &family, table.as_ref())?;
    let report = DiagnoseReport {
        kernel: model.kernel.diagnostics(),
        mobility_asymmetry: family.mobility_asymmetry(),
        conditions,
    };
    out.json("diagnose.json", &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "space": {"n": 4},
        "kernel": {"type": "random_contraction", "params": {"seed": 3, "lambda_max": 0.7}},
        "family": {"kind": "glauber", "s": 0.5}
    }"#;

    #[test]
    fn digest_ignores_key_order() {
        let a = parse_config(BASE).unwrap();
        let b = parse_config(
            r#"{"family": {"s": 0.5, "kind": "glauber"},
                "kernel": {"params": {"lambda_max": 0.7, "seed": 3}, "type": "random_contraction"},
                "space": {"n": 4}}"#,
        )
        .unwrap();
        assert_eq!(a.digest, b.digest);
    }

    #[test]
    fn bad_exponent_names_key() {
        let cfg = parse_config(&BASE.replace("0.5", "1.5")).unwrap();
        let err = cfg.config.rate_family(4).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().starts_with("family.s"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config(&BASE.replace("\"n\": 4", "\"n\": 4, \"size\": 2")).unwrap_err();
        assert!(err.to_string().starts_with("space"), "{err}");
    }

    #[test]
    fn type_error_names_path() {
        let err = parse_config(&BASE.replace("\"s\": 0.5", "\"s\": \"half\"")).unwrap_err();
        assert!(err.to_string().starts_with("family.s"), "{err}");
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }
}
