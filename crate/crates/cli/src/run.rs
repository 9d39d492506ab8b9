//! Executes a resolved config and writes its table and metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use jcarray::bloch::find_band_gaps;
use jcarray::disorder::ensemble_average;
use jcarray::site::site_spectrum;
use jcarray::transfer::array_spectrum;
use jcarray::SpectrumPoint;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Mode, OutputFormat, RunConfig};

pub const SPECTRUM_COLUMNS: &[&str] = &["delta", "T", "R", "flag"];
pub const BANDS_COLUMNS: &[&str] = &["L_over_lambda0", "omega_lo", "omega_hi", "width"];
pub const DISORDER_COLUMNS: &[&str] = &[
    "delta",
    "mean_T",
    "stderr_T",
    "mean_R",
    "stderr_R",
    "m_effective",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Compute {
        context: &'static str,
        source: jcarray::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute { .. } => 3,
            RunError::Io { .. } => 4,
        }
    }
}

fn compute_error(context: &'static str) -> impl FnOnce(jcarray::Error) -> RunError {
    move |source| RunError::Compute { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

fn spectrum_rows(points: &[SpectrumPoint]) -> Vec<Vec<Cell>> {
    points
        .iter()
        .map(|p| {
            vec![
                Cell::Float(p.delta),
                Cell::Float(p.transmission),
                Cell::Float(p.reflection),
                Cell::Int(p.flag.code().into()),
            ]
        })
        .collect()
}

/// Runs the computation described by `config`.
pub fn compute(config: &RunConfig) -> Result<Table, RunError> {
    let missing = |field: &str| RunError::Config(ConfigError::MissingField(field.into()));
    let p = &config.params;
    match config.mode {
        Mode::Single => {
            let grid = config.sweep.ok_or_else(|| missing("sweep"))?;
            let points = site_spectrum(p, &grid).map_err(compute_error("site spectrum"))?;
            Ok(Table {
                columns: SPECTRUM_COLUMNS,
                rows: spectrum_rows(&points),
            })
        }
        Mode::Array => {
            let grid = config.sweep.ok_or_else(|| missing("sweep"))?;
            let lattice = config.lattice.ok_or_else(|| missing("lattice"))?;
            let points =
                array_spectrum(p, &lattice, &grid).map_err(compute_error("array spectrum"))?;
            Ok(Table {
                columns: SPECTRUM_COLUMNS,
                rows: spectrum_rows(&points),
            })
        }
        Mode::Bands => {
            let bands = config.bands.as_ref().ok_or_else(|| missing("bands"))?;
            let window = (bands.sweep.omega_min, bands.sweep.omega_max);
            let mut rows = Vec::new();
            for &l in &bands.lattice_constants {
                let gaps = find_band_gaps(p, &bands.lattice(l), window, bands.sweep.n_points)
                    .map_err(compute_error("band-gap search"))?;
                rows.extend(gaps.iter().map(|g| {
                    vec![
                        Cell::Float(l),
                        Cell::Float(g.omega_lo),
                        Cell::Float(g.omega_hi),
                        Cell::Float(g.width),
                    ]
                }));
            }
            Ok(Table {
                columns: BANDS_COLUMNS,
                rows,
            })
        }
        Mode::Disorder => {
            let grid = config.sweep.ok_or_else(|| missing("sweep"))?;
            let lattice = config.lattice.ok_or_else(|| missing("lattice"))?;
            let disorder = config.disorder.ok_or_else(|| missing("disorder"))?;
            let stats = ensemble_average(p, &lattice, &disorder, &grid)
                .map_err(compute_error("disorder ensemble"))?;
            Ok(Table {
                columns: DISORDER_COLUMNS,
                rows: stats
                    .iter()
                    .map(|s| {
                        vec![
                            Cell::Float(s.delta),
                            Cell::Float(s.mean_t),
                            Cell::Float(s.stderr_t),
                            Cell::Float(s.mean_r),
                            Cell::Float(s.stderr_r),
                            Cell::Int(s.m_effective as u64),
                        ]
                    })
                    .collect(),
            })
        }
    }
}

/// CSV with a header line; floats carry 17 significant digits.
pub fn to_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match cell {
                Cell::Float(v) => write!(out, "{v:.16e}"),
                Cell::Int(v) => write!(out, "{v}"),
            }
            .expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// `{"columns": [...], "rows": [[...], ...]}`; non-finite floats become null.
pub fn to_json(table: &Table) -> String {
    let rows: Vec<Vec<Value>> = table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| match *cell {
                    Cell::Float(v) => json!(v),
                    Cell::Int(v) => json!(v),
                })
                .collect()
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&json!({
        "columns": table.columns,
        "rows": rows,
    }))
    .expect("tables always serialize");
    text.push('\n');
    text
}

pub fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(table),
        OutputFormat::Json => to_json(table),
    }
}

/// `<out>.meta.json` next to the data table.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn metadata(
    config: &RunConfig,
    data_path: &Path,
    rows: usize,
    threads: usize,
    started: SystemTime,
    wall_clock: f64,
) -> Value {
    json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode.name(),
        "preset": config.preset.map(|r| r.name()),
        "params": config.params,
        "lattice": config.lattice,
        "phase_model": config.lattice.map(|l| l.phase_model.name()),
        "sweep": config.sweep,
        "bands": config.bands,
        "disorder": config.disorder,
        "seed": config.disorder.map(|d| d.seed),
        "output_format": config.output_format.name(),
        "data_path": data_path.display().to_string(),
        "columns": match config.mode {
            Mode::Single | Mode::Array => SPECTRUM_COLUMNS,
            Mode::Bands => BANDS_COLUMNS,
            Mode::Disorder => DISORDER_COLUMNS,
        },
        "rows": rows,
        "warnings": config.warnings,
        "threads": threads,
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        "wall_clock_seconds": wall_clock,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub data_path: PathBuf,
    pub metadata_path: PathBuf,
    pub rows: usize,
}

/// Computes `config` and writes the table to `out` plus its metadata sidecar.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunSummary, RunError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let table = compute(config)?;
    write_file(out, &render(&table, config.output_format))?;
    let metadata_path = sidecar_path(out);
    let meta = metadata(
        config,
        out,
        table.rows.len(),
        rayon::current_num_threads(),
        started,
        clock.elapsed().as_secs_f64(),
    );
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata always serializes");
    text.push('\n');
    write_file(&metadata_path, &text)?;
    Ok(RunSummary {
        data_path: out.to_path_buf(),
        metadata_path,
        rows: table.rows.len(),
    })
}
