//! Experiment runner for the `fluidex` library.

pub mod commands;
pub mod config;
pub mod output;
pub mod parse;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use config::{Command, RunConfig, Settings};
use fluidex::FluidexError;
use parse::{parse_class_list, parse_f64_list};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, message: message.into() }
    }
}

impl From<FluidexError> for CliError {
    fn from(e: FluidexError) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fluidex", version, about = "Wave-packet growth experiments for steady Euler flows on the torus")]
pub struct Cli {
    /// Command to run; may also come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Flow name, optionally with parameters: `abc:a=1,b=1,c=0.5`.
    #[arg(long)]
    pub flow: Option<String>,
    /// Comma-separated class list, e.g. `full,star2,f2`.
    #[arg(long)]
    pub classes: Option<String>,
    /// Comma-separated horizons.
    #[arg(long)]
    pub horizons: Option<String>,
    /// Number of admissible samples per class.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// RK4 step for BAS and flow-map integration.
    #[arg(long)]
    pub step: Option<f64>,
    /// Grid resolution N (power of two).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Time step of the linearized solver.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    fn flags(&self) -> Result<RunConfig, CliError> {
        let classes = match &self.classes {
            Some(s) => {
                parse_class_list(s).map_err(|e| CliError::validation(format!("--classes: {e}")))?;
                Some(s.split(',').map(|c| c.trim().to_string()).collect())
            }
            None => None,
        };
        let horizons = match &self.horizons {
            Some(s) => Some(parse_f64_list(s).map_err(|e| CliError::validation(format!("--horizons: {e}")))?),
            None => None,
        };
        Ok(RunConfig {
            command: self.command,
            flow: self.flow.clone(),
            classes,
            horizons,
            n_samples: self.n,
            seed: self.seed,
            step: self.step,
            resolution: self.resolution,
            dt: self.dt,
            out: self.out.clone(),
            ..RunConfig::default()
        })
    }
}

/// Result of a successful run.
#[derive(Debug)]
pub struct RunSummary {
    pub stdout: String,
    pub written: Vec<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FLUIDEX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::validation(format!("FLUIDEX_THREADS must be a positive integer, got '{v}'")))?;
    // A second call in the same process finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs already-parsed settings.
pub fn run(settings: &Settings) -> Result<RunSummary, CliError> {
    configure_threads()?;
    let out = commands::dispatch(settings)?;
    let written = if settings.command == Command::Catalog && settings.out.is_none() {
        Vec::new()
    } else {
        output::write_all(settings, &out.artifacts)?
    };
    Ok(RunSummary { stdout: out.stdout, written })
}

/// Parses arguments (including the program name) and runs.
pub fn run_args<I, T>(args: I) -> Result<RunSummary, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let text = e.to_string();
        let message = text.strip_prefix("error: ").unwrap_or(&text).to_string();
        CliError { code: e.exit_code(), message }
    })?;
    let flags = cli.flags()?;
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("reading config {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    let settings = Settings::resolve(file.merged(flags))?;
    run(&settings)
}

/// Entry point used by the binary: prints and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_args(args) {
        Ok(s) => {
            print!("{}", s.stdout);
            for p in &s.written {
                log::info!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message.trim_end());
            e.code
        }
    }
}
