//! TOML run configuration.
//!
//! A file names an optional preset, the site parameters, and the sections its
//! mode needs. Sections or keys a mode does not use are rejected, so a config
//! either describes a run exactly or fails to parse.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use jcarray::disorder::DisorderSpec;
use jcarray::transfer::DEFAULT_RHO;
use jcarray::{CqedParams, Grid, GridKind, LatticeSpec, PhaseModel, Regime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Realizations used when a disorder config does not say.
pub const DEFAULT_REALIZATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },
}

fn invalid(field: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::InvalidValue {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Array,
    Bands,
    Disorder,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Array => "array",
            Mode::Bands => "bands",
            Mode::Disorder => "disorder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Frequency window for the band-gap scan, in units of ω_eg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaSweep {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandsSpec {
    pub lattice_constants: Vec<f64>,
    pub rho: f64,
    pub sweep: OmegaSweep,
}

impl BandsSpec {
    pub fn lattice(&self, l_over_lambda0: f64) -> LatticeSpec {
        LatticeSpec::new(1, l_over_lambda0).with_rho(self.rho)
    }
}

/// A fully resolved and validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub preset: Option<Regime>,
    pub params: CqedParams,
    /// Array and disorder runs.
    pub lattice: Option<LatticeSpec>,
    /// Disorder runs.
    pub disorder: Option<DisorderSpec>,
    /// Detuning sweep for every mode except bands.
    pub sweep: Option<Grid>,
    /// Bands runs.
    pub bands: Option<BandsSpec>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Explicit parameters that overrode a preset value.
    pub warnings: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<RawParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice: Option<RawLattice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bands: Option<RawBands>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disorder: Option<RawDisorder>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_ac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    big_gamma: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_over_lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_model: Option<PhaseModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridKind>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBands {
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice_constants: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisorder {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_over_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<SeedRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clamp: Option<bool>,
}

/// TOML integers are signed, so seeds above `i64::MAX` are written as strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Int(i64),
    Text(String),
}

impl SeedRepr {
    fn new(seed: u64) -> Self {
        i64::try_from(seed).map_or_else(|_| SeedRepr::Text(seed.to_string()), SeedRepr::Int)
    }

    fn value(&self) -> Result<u64, ConfigError> {
        match self {
            SeedRepr::Int(v) => {
                u64::try_from(*v).map_err(|_| invalid("disorder.seed", "must be non-negative"))
            }
            SeedRepr::Text(s) => s.parse().map_err(|_| {
                invalid(
                    "disorder.seed",
                    format!("`{s}` is not a 64-bit unsigned integer"),
                )
            }),
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "mode",
    "preset",
    "output_path",
    "output_format",
    "params",
    "lattice",
    "sweep",
    "bands",
    "disorder",
];
const PARAM_KEYS: &[&str] = &["g", "kappa", "gamma", "eta", "delta_ac", "big_gamma"];
const LATTICE_KEYS: &[&str] = &["n_sites", "l_over_lambda0", "phase_model", "rho"];
const DELTA_SWEEP_KEYS: &[&str] = &["delta_min", "delta_max", "n_points", "grid"];
const OMEGA_SWEEP_KEYS: &[&str] = &["omega_min", "omega_max", "n_points"];
const BANDS_KEYS: &[&str] = &["lattice_constants", "rho"];
const DISORDER_KEYS: &[&str] = &["sigma_over_l", "realizations", "seed", "clamp"];

/// Rejects keys that the mode does not read, naming them by dotted path.
fn check_keys(table: &toml::Table, mode: Mode) -> Result<(), ConfigError> {
    let sections: &[(&str, &[&str])] = match mode {
        Mode::Single => &[("params", PARAM_KEYS), ("sweep", DELTA_SWEEP_KEYS)],
        Mode::Array => &[
            ("params", PARAM_KEYS),
            ("lattice", LATTICE_KEYS),
            ("sweep", DELTA_SWEEP_KEYS),
        ],
        Mode::Bands => &[
            ("params", PARAM_KEYS),
            ("bands", BANDS_KEYS),
            ("sweep", OMEGA_SWEEP_KEYS),
        ],
        Mode::Disorder => &[
            ("params", PARAM_KEYS),
            ("lattice", LATTICE_KEYS),
            ("sweep", DELTA_SWEEP_KEYS),
            ("disorder", DISORDER_KEYS),
        ],
    };
    for (key, value) in table {
        if !TOP_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let Some(&(_, allowed)) = sections.iter().find(|(name, _)| name == key) else {
            if value.is_table() {
                return Err(ConfigError::UnknownKey(format!(
                    "{key} (not used by mode {})",
                    mode.name()
                )));
            }
            continue;
        };
        let Some(inner) = value.as_table() else {
            return Err(invalid(key, "expected a table"));
        };
        if let Some(bad) = inner.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(format!("{key}.{bad}")));
        }
    }
    Ok(())
}

fn require<T>(value: Option<T>, field: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::MissingField(field.to_string()))
}

fn resolve_params(
    preset: Option<Regime>,
    raw: Option<RawParams>,
    warnings: &mut Vec<String>,
) -> Result<CqedParams, ConfigError> {
    let raw = raw.unwrap_or_default();
    let base = preset.map(Regime::params);
    let mut pick = |name: &str,
                    explicit: Option<f64>,
                    preset_value: Option<f64>,
                    fallback: Option<f64>| {
        match (explicit, preset_value) {
            (Some(v), Some(p)) => {
                if v != p {
                    warnings.push(format!("params.{name} = {v} overrides preset value {p}"));
                }
                Ok(v)
            }
            (Some(v), None) => Ok(v),
            (None, Some(p)) => Ok(p),
            (None, None) => {
                fallback.ok_or_else(|| ConfigError::MissingField(format!("params.{name}")))
            }
        }
    };
    let params = CqedParams {
        g: pick("g", raw.g, base.map(|b| b.g), None)?,
        kappa: pick("kappa", raw.kappa, base.map(|b| b.kappa), None)?,
        gamma: pick("gamma", raw.gamma, base.map(|b| b.gamma), None)?,
        eta: pick("eta", raw.eta, base.map(|b| b.eta), None)?,
        delta_ac: pick(
            "delta_ac",
            raw.delta_ac,
            base.map(|b| b.delta_ac),
            Some(0.0),
        )?,
        big_gamma: pick(
            "big_gamma",
            raw.big_gamma,
            base.map(|b| b.big_gamma),
            Some(1.0),
        )?,
    };
    params.validate().map_err(|e| invalid("params", e))
}

fn resolve_lattice(raw: Option<RawLattice>) -> Result<LatticeSpec, ConfigError> {
    let raw = require(raw, "lattice")?;
    let spec = LatticeSpec {
        n_sites: require(raw.n_sites, "lattice.n_sites")?,
        l_over_lambda0: require(raw.l_over_lambda0, "lattice.l_over_lambda0")?,
        phase_model: raw.phase_model.unwrap_or_default(),
        rho: raw.rho.unwrap_or(DEFAULT_RHO),
    };
    spec.validate().map_err(|e| invalid("lattice", e))
}

fn resolve_delta_sweep(raw: Option<RawSweep>) -> Result<Grid, ConfigError> {
    let raw = require(raw, "sweep")?;
    let grid = Grid {
        lo: require(raw.delta_min, "sweep.delta_min")?,
        hi: require(raw.delta_max, "sweep.delta_max")?,
        n_points: require(raw.n_points, "sweep.n_points")?,
        kind: raw.grid.unwrap_or_default(),
    };
    grid.validate().map_err(|e| invalid("sweep", e))
}

fn resolve_bands(raw: Option<RawBands>, sweep: Option<RawSweep>) -> Result<BandsSpec, ConfigError> {
    let raw = require(raw, "bands")?;
    let sweep = require(sweep, "sweep")?;
    let sweep = OmegaSweep {
        omega_min: require(sweep.omega_min, "sweep.omega_min")?,
        omega_max: require(sweep.omega_max, "sweep.omega_max")?,
        n_points: require(sweep.n_points, "sweep.n_points")?,
    };
    let bands = BandsSpec {
        lattice_constants: require(raw.lattice_constants, "bands.lattice_constants")?,
        rho: raw.rho.unwrap_or(DEFAULT_RHO),
        sweep,
    };
    if bands.lattice_constants.is_empty() {
        return Err(invalid("bands.lattice_constants", "list is empty"));
    }
    if !(bands.rho.is_finite() && bands.rho > 0.0) {
        return Err(invalid(
            "bands.rho",
            format!("must be positive, got {}", bands.rho),
        ));
    }
    for &l in &bands.lattice_constants {
        bands
            .lattice(l)
            .validate()
            .map_err(|e| invalid("bands.lattice_constants", e))?;
    }
    Grid::cell_centered(sweep.omega_min, sweep.omega_max, sweep.n_points)
        .map_err(|e| invalid("sweep", e))?;
    if sweep.n_points < jcarray::bloch::MIN_GAP_SCAN {
        return Err(invalid(
            "sweep.n_points",
            format!(
                "band scans need at least {} points",
                jcarray::bloch::MIN_GAP_SCAN
            ),
        ));
    }
    Ok(bands)
}

fn resolve_disorder(
    raw: Option<RawDisorder>,
    seed: Option<u64>,
) -> Result<DisorderSpec, ConfigError> {
    let raw = require(raw, "disorder")?;
    let spec = DisorderSpec {
        sigma_over_l: require(raw.sigma_over_l, "disorder.sigma_over_l")?,
        realizations: raw.realizations.unwrap_or(DEFAULT_REALIZATIONS),
        seed: match seed {
            Some(s) => s,
            None => require(raw.seed, "disorder.seed")?.value()?,
        },
        clamp: raw.clamp.unwrap_or(true),
    };
    let spec = spec.validate().map_err(|e| invalid("disorder", e))?;
    if spec.realizations < 2 {
        return Err(invalid(
            "disorder.realizations",
            "ensembles need at least 2",
        ));
    }
    Ok(spec)
}

fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    toml::Table::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
}

fn mode_of(table: &toml::Table) -> Result<Option<Mode>, ConfigError> {
    match table.get("mode") {
        None => Ok(None),
        Some(value) => Mode::deserialize(value.clone())
            .map(Some)
            .map_err(|e| invalid("mode", e.message())),
    }
}

/// Parses a config whose mode is given by the `mode` key.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table = parse_table(text)?;
    let mode = mode_of(&table)?.ok_or_else(|| ConfigError::MissingField("mode".into()))?;
    resolve(table, mode, None)
}

/// Parses a config for `mode`; a `mode` key in the file must agree.
pub fn parse_config_for(text: &str, mode: Mode) -> Result<RunConfig, ConfigError> {
    parse_config_with_seed(text, mode, None)
}

/// As [`parse_config_for`], with `seed` replacing `disorder.seed`.
pub fn parse_config_with_seed(
    text: &str,
    mode: Mode,
    seed: Option<u64>,
) -> Result<RunConfig, ConfigError> {
    let table = parse_table(text)?;
    if let Some(declared) = mode_of(&table)? {
        if declared != mode {
            return Err(invalid(
                "mode",
                format!(
                    "file declares {} but {} was requested",
                    declared.name(),
                    mode.name()
                ),
            ));
        }
    }
    resolve(table, mode, seed)
}

fn resolve(table: toml::Table, mode: Mode, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    check_keys(&table, mode)?;
    let raw = RawConfig::deserialize(table).map_err(|e| invalid("config", e.message()))?;
    let preset = raw
        .preset
        .as_deref()
        .map(|name| {
            Regime::from_name(name)
                .ok_or_else(|| invalid("preset", format!("unknown preset `{name}`")))
        })
        .transpose()?;
    let mut warnings = Vec::new();
    let params = resolve_params(preset, raw.params, &mut warnings)?;
    let (lattice, disorder, sweep, bands) = match mode {
        Mode::Single => (None, None, Some(resolve_delta_sweep(raw.sweep)?), None),
        Mode::Array => (
            Some(resolve_lattice(raw.lattice)?),
            None,
            Some(resolve_delta_sweep(raw.sweep)?),
            None,
        ),
        Mode::Bands => {
            if !params.is_lossless() {
                return Err(invalid("params", "band analysis needs kappa = gamma = 0"));
            }
            (None, None, None, Some(resolve_bands(raw.bands, raw.sweep)?))
        }
        Mode::Disorder => (
            Some(resolve_lattice(raw.lattice)?),
            Some(resolve_disorder(raw.disorder, seed)?),
            Some(resolve_delta_sweep(raw.sweep)?),
            None,
        ),
    };
    Ok(RunConfig {
        mode,
        preset,
        params,
        lattice,
        disorder,
        sweep,
        bands,
        output_path: raw.output_path,
        output_format: raw.output_format.unwrap_or_default(),
        warnings,
    })
}

/// Writes `config` as TOML that [`parse_config`] maps back to it.
pub fn serialize_config(config: &RunConfig) -> String {
    let p = &config.params;
    let mut raw = RawConfig {
        mode: Some(config.mode),
        preset: config.preset.map(|r| r.name().to_string()),
        output_path: config.output_path.clone(),
        output_format: Some(config.output_format),
        params: Some(RawParams {
            g: Some(p.g),
            kappa: Some(p.kappa),
            gamma: Some(p.gamma),
            eta: Some(p.eta),
            delta_ac: Some(p.delta_ac),
            big_gamma: Some(p.big_gamma),
        }),
        ..RawConfig::default()
    };
    if let Some(l) = &config.lattice {
        raw.lattice = Some(RawLattice {
            n_sites: Some(l.n_sites),
            l_over_lambda0: Some(l.l_over_lambda0),
            phase_model: Some(l.phase_model),
            rho: Some(l.rho),
        });
    }
    if let Some(g) = &config.sweep {
        raw.sweep = Some(RawSweep {
            delta_min: Some(g.lo),
            delta_max: Some(g.hi),
            n_points: Some(g.n_points),
            grid: Some(g.kind),
            ..RawSweep::default()
        });
    }
    if let Some(b) = &config.bands {
        raw.bands = Some(RawBands {
            lattice_constants: Some(b.lattice_constants.clone()),
            rho: Some(b.rho),
        });
        raw.sweep = Some(RawSweep {
            omega_min: Some(b.sweep.omega_min),
            omega_max: Some(b.sweep.omega_max),
            n_points: Some(b.sweep.n_points),
            ..RawSweep::default()
        });
    }
    if let Some(d) = &config.disorder {
        raw.disorder = Some(RawDisorder {
            sigma_over_l: Some(d.sigma_over_l),
            realizations: Some(d.realizations),
            seed: Some(SeedRepr::new(d.seed)),
            clamp: Some(d.clamp),
        });
    }
    toml::to_string(&raw).expect("config tables always serialize")
}
