//! Command-line front end: configuration, mode dispatch and artifact writing.
//!
//! Every mode writes `summary.json` plus mode-specific CSV files into the
//! output directory. Wall-clock timing goes to a separate `timing.json` so
//! that everything else is a pure function of the configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::array::{exact_difference_density, ArraySpec, DEFAULT_ETA_TOLERANCE};
use crate::density::{Density, GridDensity};
use crate::entangle::{
    device_state, local_measurement, log_negativity, measured_recovery, pair_bell_target,
    partial_transpose_spectrum, recovered_entanglement, PhaseDistribution,
};
use crate::error::{Error, ErrorKind};
use crate::montecarlo::{
    device_moments, fit_fringe, residual_moments, run_experiment, ExperimentOptions, Histogram, HistogramLayout,
};
use crate::noisefield::{
    displacement_coefficients, newtonian_acceleration, sample_path, solve_standoff_distance, NoiseModel,
    PointMassSource, Process,
};
use crate::oracle::{compare_distributions, evolve_split_step, prepare_cat, GridParams, REFERENCE_POINTS};
use crate::wavepacket::{averaged_pdf, overlap_time, position_pdf, FringePattern, FringeProfile, InterferometerSpec};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "MWARRAY_OUT";
const DEFAULT_OUT: &str = "mwarray-out";
pub const CSV_HEADER: &str = "bin_center,density";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Pair,
    Array,
    Entangle,
    Oracle,
    Scenario,
}

#[derive(Debug, Parser)]
#[command(name = "mwarray", version, about = "Simulate arrays of matter-wave interferometers under common-mode noise")]
pub struct Cli {
    /// Run mode; overrides the mode in the config file.
    #[arg(value_enum)]
    pub mode: Option<Mode>,
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Cancellation order q of the tracked difference variable.
    #[arg(long)]
    pub order: Option<usize>,
    /// Output directory [default: $MWARRAY_OUT, else ./mwarray-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest accepted cross-term weight η in the order recursion.
    #[arg(long = "tolerance-eta")]
    pub tolerance_eta: Option<f64>,
}

/// One device, given directly, by its at-overlap pattern, or as a different
/// mass matched to device 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceConfig {
    Raw(RawDevice),
    Pattern(PatternDevice),
    Matched(MatchedDevice),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDevice {
    pub mass: f64,
    pub omega: f64,
    pub alpha_r: f64,
    pub alpha_i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDevice {
    pub mass: f64,
    pub omega: f64,
    pub wavenumber: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchedDevice {
    pub matched_mass: f64,
}

/// Desk-scale defaults: `k x₀ = 10⁻³`, `σ_{t_k} = 10⁴ x₀` with `x₀ = 1`.
fn desk_device() -> DeviceConfig {
    DeviceConfig::Pattern(PatternDevice { mass: 0.5, omega: 1.0, wavenumber: 1e-3, width: 1e4 })
}

fn oracle_device() -> DeviceConfig {
    DeviceConfig::Raw(RawDevice { mass: 0.5, omega: 1.0, alpha_r: -1.5, alpha_i: 1.0 })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Processes for `g⁽⁰⁾, g⁽¹⁾, …`.
    #[serde(default)]
    pub orders: Vec<Process>,
    /// Shortcut for a per-shot Gaussian common-mode displacement of this
    /// standard deviation at `t_k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_gamma: Option<f64>,
    /// Time step for sampling time-resolved processes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// kg
    pub source_mass: f64,
    /// Site spacing, m.
    pub spacing: f64,
    /// Acceleration sensitivity, m/s².
    pub delta_a: f64,
    pub orders: Vec<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self { source_mass: 1.0, spacing: 0.1, delta_a: 6.67e-17, orders: vec![0, 1, 2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleConfig {
    pub phi: PhaseDistribution,
    pub delta: PhaseDistribution,
    pub copies: Vec<usize>,
}

impl Default for EntangleConfig {
    fn default() -> Self {
        Self { phi: PhaseDistribution::uniform(), delta: PhaseDistribution::uniform(), copies: vec![1, 2, 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub paths: usize,
    pub steps: usize,
    pub points: usize,
    /// Grid spacing; the coarsest allowed value when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    pub relaxation_time: f64,
    pub std: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { paths: 20, steps: 1250, points: REFERENCE_POINTS, spacing: None, relaxation_time: 0.5, std: 0.4 }
    }
}

fn default_spacing() -> f64 {
    1.0
}

fn default_shots() -> u64 {
    100_000
}

fn default_eta() -> f64 {
    DEFAULT_ETA_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Device list; mode-specific defaults when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub devices: Vec<DeviceConfig>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Order q; 0 for `single`, 1 for `pair`, 2 for `array` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eta")]
    pub eta_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<HistogramLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub entangle: EntangleConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            devices: Vec::new(),
            spacing: default_spacing(),
            noise: NoiseConfig::default(),
            shots: default_shots(),
            order: None,
            seed: 0,
            eta_tolerance: default_eta(),
            layout: None,
            out: None,
            scenario: ScenarioConfig::default(),
            entangle: EntangleConfig::default(),
            oracle: OracleConfig::default(),
        }
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(match self.mode {
            Mode::Single => 0,
            Mode::Pair => 1,
            _ => 2,
        })
    }

    fn device_specs(&self) -> Result<Vec<InterferometerSpec>, Error> {
        let needed = match self.mode {
            Mode::Single | Mode::Oracle => 1,
            Mode::Pair => 2,
            _ => self.order() + 1,
        };
        let configs: Vec<DeviceConfig> = if self.devices.is_empty() {
            let first = if self.mode == Mode::Oracle { oracle_device() } else { desk_device() };
            let mut v = vec![first];
            v.extend((1..needed).map(|_| DeviceConfig::Matched(MatchedDevice { matched_mass: 0.5 })));
            v
        } else {
            self.devices.clone()
        };
        let mut out = Vec::with_capacity(configs.len());
        for (n, c) in configs.iter().enumerate() {
            let spec = match *c {
                DeviceConfig::Raw(d) => InterferometerSpec::new(d.mass, d.omega, d.alpha_r, d.alpha_i),
                DeviceConfig::Pattern(d) => InterferometerSpec::for_pattern(d.mass, d.omega, d.wavenumber, d.width)?,
                DeviceConfig::Matched(d) => match out.first() {
                    Some(first) => InterferometerSpec::matched_to(first, d.matched_mass)?,
                    None => return Err(Error::Configuration("device 0 cannot be matched to itself".into())),
                },
            };
            out.push(spec.at_site(n));
        }
        if self.mode == Mode::Single || self.mode == Mode::Oracle {
            out.truncate(1);
        }
        if out.len() < needed {
            return Err(Error::Configuration(format!(
                "order {} needs {needed} devices, config lists {}",
                self.order(),
                out.len()
            )));
        }
        Ok(out)
    }

    fn noise_model(&self, tk: f64) -> Result<NoiseModel, Error> {
        let mut orders = self.noise.orders.clone();
        if let Some(s) = self.noise.sigma_gamma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Configuration(format!("noise.sigma_gamma must be >= 0, got {s}")));
            }
            if orders.first().is_some_and(|p| *p != Process::Zero) {
                return Err(Error::Configuration("noise.sigma_gamma conflicts with an explicit order-0 process".into()));
            }
            if !(tk > 0.0) {
                return Err(Error::Configuration("noise.sigma_gamma needs a positive overlap time".into()));
            }
            let common = NoiseModel::common_mode_displacement(s, tk).orders[0];
            if orders.is_empty() {
                orders.push(common);
            } else {
                orders[0] = common;
            }
        }
        if orders.is_empty() {
            orders.push(Process::Zero);
        }
        let model = NoiseModel::new(orders);
        model.validate()?;
        Ok(model)
    }
}

/// Failures of a CLI run, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// The configuration could not be read or parsed.
    Parse(String),
    Io(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Io(_) => 1,
            CliError::Run(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "config: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parse a TOML or JSON configuration, chosen by file extension.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
}

pub fn parse_config(text: &str, json: bool) -> Result<RunConfig, CliError> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }
}

/// Merge the command line over the config file and pick the output directory:
/// `--out`, then the config's `out`, then `$MWARRAY_OUT`, then `./mwarray-out`.
pub fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let mut config = match (&cli.config, cli.mode) {
        (Some(path), _) => load_config(path)?,
        (None, Some(mode)) => RunConfig::new(mode),
        (None, None) => return Err(CliError::Parse("give a mode or --config".into())),
    };
    if let Some(m) = cli.mode {
        config.mode = m;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(s) = cli.shots {
        config.shots = s;
    }
    if let Some(q) = cli.order {
        config.order = Some(q);
    }
    if let Some(t) = cli.tolerance_eta {
        config.eta_tolerance = t;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    config.out = None;
    Ok((config, out))
}

/// Everything a run reports besides timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub seed: u64,
    /// The resolved configuration; re-running it reproduces every output.
    pub config: RunConfig,
    pub results: Value,
    pub artifacts: Vec<String>,
}

/// Fit and comparison of one tracked variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub name: String,
    pub file: String,
    pub analytic_file: String,
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
    pub bins: usize,
    pub fitted_visibility: Option<f64>,
    pub fitted_wavenumber: Option<f64>,
    pub fitted_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub analytic_visibility: f64,
    pub analytic_wavenumber: f64,
    pub analytic_width: f64,
    /// Whether the analytic density includes the noise average.
    pub analytic_includes_noise: bool,
    pub ks_distance: f64,
    pub chi_square_per_bin: f64,
}

/// Format a CSV value with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn density_csv(xs: &[f64], values: &[f64]) -> String {
    let mut s = String::with_capacity(48 * xs.len() + 32);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (x, v) in xs.iter().zip(values) {
        let _ = writeln!(s, "{},{}", format_value(*x), format_value(*v));
    }
    s
}

struct Writer<'a> {
    dir: &'a Path,
    artifacts: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// Analytic reference for one histogram.
struct Reference<'a> {
    density: &'a dyn Density,
    visibility: f64,
    wavenumber: f64,
    width: f64,
    includes_noise: bool,
    /// Wavenumber handed to the fringe fit.
    fit_hint: f64,
}

/// Noise-averaged density of one device whose residual displacement has the
/// given closed-form moments.
fn device_profile(pattern: &FringePattern, moments: Option<(f64, f64)>) -> Result<FringeProfile, Error> {
    match moments {
        Some((mean, std)) => {
            let mut p = averaged_pdf(pattern, std)?;
            p.center += mean;
            Ok(p)
        }
        None => Ok(pattern.profile()),
    }
}

fn report_variable(name: &str, hist: &Histogram, reference: &Reference<'_>, w: &mut Writer<'_>) -> Result<VariableReport, CliError> {
    let centers = hist.centers();
    let file = format!("{name}.csv");
    let analytic_file = format!("{name}_analytic.csv");
    w.write(&file, &density_csv(&centers, &hist.density()))?;
    let model: Vec<f64> = centers.iter().map(|&x| reference.density.pdf(x)).collect();
    w.write(&analytic_file, &density_csv(&centers, &model))?;
    let fit = if reference.fit_hint > 0.0 { fit_fringe(hist, reference.fit_hint) } else { Err(Error::Fit("no fringe".into())) };
    let (fv, fk, fw, fe) = match fit {
        Ok(f) => (Some(f.visibility), Some(f.wavenumber), Some(f.width), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    Ok(VariableReport {
        name: name.to_string(),
        file,
        analytic_file,
        total: hist.total,
        underflow: hist.underflow,
        overflow: hist.overflow,
        bins: hist.counts.len(),
        fitted_visibility: fv,
        fitted_wavenumber: fk,
        fitted_width: fw,
        fit_error: fe,
        analytic_visibility: reference.visibility,
        analytic_wavenumber: reference.wavenumber,
        analytic_width: reference.width,
        analytic_includes_noise: reference.includes_noise,
        ks_distance: hist.ks_to_density(reference.density),
        chi_square_per_bin: hist.chi_square_per_bin(reference.density),
    })
}

fn run_histograms(config: &RunConfig, w: &mut Writer<'_>) -> Result<Value, CliError> {
    let q = config.order();
    let spec = ArraySpec::new(config.device_specs()?, config.spacing)?;
    let tk = spec.overlap_time()?;
    let model = config.noise_model(tk)?;
    let options = ExperimentOptions {
        layout: config.layout,
        noise_step: config.noise.step,
        eta_tolerance: config.eta_tolerance,
        device_histograms: config.mode != Mode::Single,
        ..ExperimentOptions::default()
    };
    let result = run_experiment(&spec, &model, config.shots, q, config.seed, &options)?;
    let mut variables = Vec::new();
    let top = result.recursion.pattern();
    let moments = residual_moments(&spec, &model, q)?;
    // The analytic file holds the exact density of x_{0,q}; the recursion's
    // pattern is reported alongside it.
    let exact = exact_difference_density(&spec, q, moments)?;
    let (k_exact, v_exact) = exact.dominant_fringe().unwrap_or((top.wavenumber, 0.0));
    let recursion = device_profile(&top, moments)?;
    variables.push(report_variable(
        &format!("x_0_{q}"),
        &result.difference,
        &Reference {
            density: &exact,
            visibility: v_exact,
            wavenumber: k_exact,
            width: exact.width,
            includes_noise: moments.is_some(),
            fit_hint: top.wavenumber,
        },
        w,
    )?);
    let patterns = spec.patterns()?;
    for (n, hist) in result.devices.iter().enumerate() {
        let moments = device_moments(&spec, &model, n)?;
        let profile = device_profile(&patterns[n], moments)?;
        let reference = Reference {
            density: &profile,
            visibility: profile.visibility(),
            wavenumber: profile.wavenumber,
            width: profile.width,
            includes_noise: moments.is_some(),
            fit_hint: profile.wavenumber,
        };
        variables.push(report_variable(&format!("device_{n}"), hist, &reference, w)?);
    }
    Ok(json!({
        "order": q,
        "shots": config.shots,
        "overlap_time": tk,
        "etas": result.recursion.etas,
        "max_eta": result.recursion.max_eta(),
        "pattern_offsets": result.recursion.levels.iter().map(|l| l[0].offset).collect::<Vec<_>>(),
        "pattern_wavenumbers": result.recursion.levels.iter().map(|l| l[0].wavenumber).collect::<Vec<_>>(),
        "pattern_widths": result.recursion.levels.iter().map(|l| l[0].width).collect::<Vec<_>>(),
        "recursion_visibility": recursion.visibility(),
        "recursion_ks_distance": result.difference.ks_to_density(&recursion),
        "variables": variables,
    }))
}

fn run_scenario(config: &RunConfig) -> Result<Value, CliError> {
    let s = &config.scenario;
    let rows = s
        .orders
        .iter()
        .map(|&q| {
            let r = solve_standoff_distance(s.source_mass, s.spacing, q, s.delta_a)?;
            Ok(json!({ "order": q, "distance_m": r }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let reference = newtonian_acceleration(&PointMassSource { mass: s.source_mass, distance: 1000.0 });
    Ok(json!({
        "source_mass_kg": s.source_mass,
        "spacing_m": s.spacing,
        "delta_a": s.delta_a,
        "acceleration_at_1km": reference,
        "standoff": rows,
    }))
}

fn run_entangle(config: &RunConfig, w: &mut Writer<'_>) -> Result<Value, CliError> {
    let e = &config.entangle;
    let bell = log_negativity(&device_state(1, 0.0, 0.0)?)?;
    let uniform = PhaseDistribution::uniform();
    let fixed = PhaseDistribution::point(0.0);
    let single = crate::entangle::dephased_chain(1, &uniform, &fixed)?;
    let pair = crate::entangle::dephased_chain(2, &uniform, &fixed)?;
    let outcomes = local_measurement(&pair)?;
    let target = pair_bell_target()?;
    let branches: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            let (en, fid) = match &o.state {
                Some(s) => (log_negativity(s)?, s.fidelity_with(&target)),
                None => (0.0, 0.0),
            };
            Ok(json!({ "outcome": o.label, "probability": o.probability, "log_negativity": en, "fidelity_with_pair_bell": fid }))
        })
        .collect::<Result<_, Error>>()?;
    let measurement_bound: f64 = outcomes
        .iter()
        .filter_map(|o| o.state.as_ref().map(|s| log_negativity(s).map(|x| x * o.probability)))
        .sum::<Result<f64, Error>>()?;
    let spectrum = partial_transpose_spectrum(&pair)?;
    let copies = e
        .copies
        .iter()
        .map(|&c| {
            Ok(json!({
                "copies": c,
                "log_negativity": recovered_entanglement(c, &e.phi, &e.delta)?,
                "measured_recovery": measured_recovery(c, &e.phi, &e.delta)?,
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut csv = String::from("eigenvalue\n");
    for x in &spectrum {
        let _ = writeln!(csv, "{}", format_value(*x));
    }
    w.write("pair_partial_transpose_spectrum.csv", &csv)?;
    Ok(json!({
        "bell_log_negativity": bell,
        "single_dephased_log_negativity": log_negativity(&single)?,
        "pair_dephased_log_negativity": log_negativity(&pair)?,
        "pair_measurement_bound": measurement_bound,
        "pair_measurement": branches,
        "pair_partial_transpose_min": spectrum.first().copied(),
        "phi": e.phi,
        "delta": e.delta,
        "recovery": copies,
    }))
}

fn run_oracle(config: &RunConfig, w: &mut Writer<'_>) -> Result<Value, CliError> {
    let o = &config.oracle;
    let spec = config.device_specs()?[0];
    let tk = overlap_time(&spec)?;
    if o.paths == 0 || o.steps == 0 {
        return Err(Error::Configuration("oracle needs paths >= 1 and steps >= 1".into()).into());
    }
    let grid = GridParams {
        points: o.points,
        spacing: match o.spacing {
            Some(s) => s,
            None => GridParams::reference(&spec)?.spacing,
        },
        center: 0.0,
    };
    let model = NoiseModel::new(vec![Process::OrnsteinUhlenbeck { relaxation_time: o.relaxation_time, std: o.std }]);
    let initial = prepare_cat(&spec, &grid)?;
    let rows = (0..o.paths)
        .into_par_iter()
        .map(|p| -> Result<_, Error> {
            let seed = config.seed.wrapping_add(p as u64);
            let path = sample_path(&model, tk, tk / o.steps as f64, seed)?;
            let xg = displacement_coefficients(&path, tk)?.get(0);
            let out = evolve_split_step(initial.clone(), &path, tk, o.steps, spec.mass)?;
            let analytic = position_pdf(&spec, tk, xg)?;
            let exact = GridDensity::from_fn(grid.start(), grid.spacing, grid.points, |x| analytic.pdf(x));
            let grid_density = out.density();
            let m = compare_distributions(&grid_density, &exact)?;
            let shift = out.centroid() - initial_centroid(&spec, &grid)?;
            Ok((seed, xg, shift, m, grid_density, exact))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let (_, _, _, _, first_grid, first_exact) = &rows[0];
    let xs: Vec<f64> = first_grid.xs().collect();
    w.write("oracle_path_0.csv", &density_csv(&xs, &first_grid.values))?;
    w.write("oracle_path_0_analytic.csv", &density_csv(&xs, &first_exact.values))?;
    let relative = |xg: f64, shift: f64| if xg != 0.0 { (shift - xg).abs() / xg.abs() } else { (shift - xg).abs() };
    let max_l1 = rows.iter().map(|r| r.3.l1).fold(0.0, f64::max);
    let max_rel = rows.iter().map(|r| relative(r.1, r.2)).fold(0.0, f64::max);
    let table: Vec<Value> = rows
        .iter()
        .map(|(seed, xg, shift, m, _, _)| {
            json!({ "seed": seed, "x_gamma": xg, "centroid_shift": shift, "centroid_relative_error": relative(*xg, *shift),
                    "l1": m.l1, "linf": m.linf, "ks": m.ks })
        })
        .collect();
    Ok(json!({
        "overlap_time": tk,
        "grid_points": grid.points,
        "grid_spacing": grid.spacing,
        "steps": o.steps,
        "max_l1": max_l1,
        "max_centroid_relative_error": max_rel,
        "paths": table,
    }))
}

/// Centroid of the noise-free evolution; zero for the symmetric cat, computed
/// on the grid to cancel discretization offsets.
fn initial_centroid(spec: &InterferometerSpec, grid: &GridParams) -> Result<f64, Error> {
    let tk = overlap_time(spec)?;
    let analytic = position_pdf(spec, tk, 0.0)?;
    let d = GridDensity::from_fn(grid.start(), grid.spacing, grid.points, |x| analytic.pdf(x));
    Ok(d.mean())
}

/// Run one resolved configuration, writing artifacts into `out`.
pub fn run_config(config: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let started = Instant::now();
    let mut w = Writer { dir: out, artifacts: Vec::new() };
    if config.shots == 0 && matches!(config.mode, Mode::Single | Mode::Pair | Mode::Array) {
        return Err(Error::Configuration("shots must be >= 1".into()).into());
    }
    if !(config.eta_tolerance > 0.0) {
        return Err(Error::Configuration(format!("eta_tolerance must be positive, got {}", config.eta_tolerance)).into());
    }
    let results = match config.mode {
        Mode::Single | Mode::Pair | Mode::Array => run_histograms(config, &mut w)?,
        Mode::Scenario => run_scenario(config)?,
        Mode::Entangle => run_entangle(config, &mut w)?,
        Mode::Oracle => run_oracle(config, &mut w)?,
    };
    let mut echo = config.clone();
    echo.out = None;
    let mut summary = RunSummary { mode: config.mode, seed: config.seed, config: echo, results, artifacts: Vec::new() };
    w.artifacts.push("summary.json".into());
    summary.artifacts = w.artifacts.clone();
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?;
    w.write("summary.json", &(text + "\n"))?;
    let timing = json!({ "elapsed_seconds": started.elapsed().as_secs_f64(), "threads": rayon::current_num_threads() });
    let path = out.join("timing.json");
    fs::write(&path, timing.to_string() + "\n").map_err(|e| io_err(&path, e))?;
    Ok(summary)
}

/// Short human-readable digest of a summary.
pub fn describe(summary: &RunSummary) -> String {
    let r = &summary.results;
    let mut s = String::new();
    match summary.mode {
        Mode::Scenario => {
            if let Some(rows) = r["standoff"].as_array() {
                for row in rows {
                    let _ = writeln!(s, "order {}: standoff distance {:.2} m", row["order"], row["distance_m"].as_f64().unwrap_or(f64::NAN));
                }
            }
        }
        Mode::Entangle => {
            let _ = writeln!(s, "E_N(pair, dephased) = {}", r["pair_dephased_log_negativity"]);
            let _ = writeln!(s, "measurement bound   = {}", r["pair_measurement_bound"]);
            if let Some(rows) = r["recovery"].as_array() {
                for row in rows {
                    let _ = writeln!(s, "copies {}: E_N = {}, measured = {}", row["copies"], row["log_negativity"], row["measured_recovery"]);
                }
            }
        }
        Mode::Oracle => {
            let _ = writeln!(s, "max L1 = {:e}", r["max_l1"].as_f64().unwrap_or(f64::NAN));
            let _ = writeln!(s, "max centroid relative error = {:e}", r["max_centroid_relative_error"].as_f64().unwrap_or(f64::NAN));
        }
        _ => {
            if let Some(vars) = r["variables"].as_array() {
                for v in vars {
                    let _ = writeln!(
                        s,
                        "{}: fitted visibility {} (analytic {:.6}), KS {:.2e}",
                        v["name"].as_str().unwrap_or("?"),
                        v["fitted_visibility"].as_f64().map_or("n/a".to_string(), |x| format!("{x:.6}")),
                        v["analytic_visibility"].as_f64().unwrap_or(f64::NAN),
                        v["ks_distance"].as_f64().unwrap_or(f64::NAN),
                    );
                }
            }
        }
    }
    s
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> u8 {
    let outcome = resolve(&cli).and_then(|(config, out)| {
        let summary = run_config(&config, &out)?;
        Ok((summary, out))
    });
    match outcome {
        Ok((summary, out)) => {
            use std::io::Write as _;
            // a closed stdout (e.g. piped into `head`) must not turn a finished run into a failure
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", describe(&summary));
            let _ = writeln!(stdout, "wrote {} files to {}", summary.artifacts.len(), out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
