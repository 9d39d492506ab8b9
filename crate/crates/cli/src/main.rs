use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jcarray_cli::config::{parse_config_with_seed, ConfigError, Mode, OutputFormat};
use jcarray_cli::run::{run, RunError};

/// Single-photon spectra of waveguide-coupled Jaynes–Cummings arrays.
#[derive(Parser, Debug)]
#[command(name = "jcarray", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transmission and reflection of one site.
    Single(CommonArgs),
    /// Spectrum of a finite periodic array.
    Array(CommonArgs),
    /// Band gaps of the infinite lattice.
    Bands(CommonArgs),
    /// Ensemble-averaged spectrum of position-disordered arrays.
    Disorder(DisorderArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Data table path; overrides `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `output_format`.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads. Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct DisorderArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Overrides `disorder.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (mode, args, seed) = match cli.command {
        Command::Single(a) => (Mode::Single, a, None),
        Command::Array(a) => (Mode::Array, a, None),
        Command::Bands(a) => (Mode::Bands, a, None),
        Command::Disorder(a) => (Mode::Disorder, a.common, a.seed),
    };
    let text = std::fs::read_to_string(&args.config).map_err(|source| RunError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = parse_config_with_seed(&text, mode, seed)?;
    if let Some(format) = args.format {
        config.output_format = format;
    }
    let out = args
        .out
        .or_else(|| config.output_path.clone())
        .ok_or_else(|| ConfigError::MissingField("output_path".into()))?;
    for warning in &config.warnings {
        eprintln!("jcarray: warning: {warning}");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError::InvalidValue {
            field: "--threads".into(),
            reason: e.to_string(),
        })?;
    pool.install(|| run(&config, &out))?;
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jcarray: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
