//! `modeconv`: runs one simulation scenario and writes CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 bad config or input, 3 physics infeasibility,
//! 4 IO failure. A `manifest.json` is written whenever the output
//! directory is usable.

mod config;
mod manifest;
mod modes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mode_converter::Error;

#[derive(Debug, Parser)]
#[command(name = "modeconv", version, about = "Mechanical mode converter simulator")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Debug, Clone, Subcommand)]
enum Mode {
    /// Capture, store and release a signal; writes trajectory, converted
    /// signal and an efficiency summary.
    Protocol(Common),
    /// Coupling schedules and pump programs of both legs.
    Pulse(Common),
    /// Wigner-Ville map and marginals of a signal.
    Wigner(Common),
    /// Monte Carlo quadrature ensemble of the converted signal.
    NoiseEnsemble(Common),
    /// Fit receiver gain and efficiency to load-temperature data.
    Calibration(Common),
    /// Bias sweep of the electrostatic tuning model.
    TuningSweep(Common),
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker threads, 0 = one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Physics(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Physics(m) | CliError::Io(m) => m,
        }
    }

    /// Bad inputs map to 2, everything the physics refuses to 3.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::DegenerateInput(_) | Error::MisalignedGrid(_) | Error::Nyquist { .. } => {
                CliError::Config(e.to_string())
            }
            Error::DegenerateParameter(_) | Error::StepSize { .. } | Error::FitFailure(_) | Error::PullIn => {
                CliError::Physics(e.to_string())
            }
            Error::Io(io) => CliError::Io(io.to_string()),
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match cli.mode {
        Mode::Protocol(c) => ("protocol", c),
        Mode::Pulse(c) => ("pulse", c),
        Mode::Wigner(c) => ("wigner", c),
        Mode::NoiseEnsemble(c) => ("noise-ensemble", c),
        Mode::Calibration(c) => ("calibration", c),
        Mode::TuningSweep(c) => ("tuning-sweep", c),
    };
    let code = run(name, common);
    ExitCode::from(code)
}

fn run(mode: &'static str, args: Common) -> u8 {
    let loaded = match config::load(args.config.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("modeconv: {}", e.message());
            return e.code();
        }
    };
    let seed = args.seed.or(loaded.scenario.seed).unwrap_or(0);
    let out_dir = args
        .out
        .clone()
        .or_else(|| loaded.scenario.output_dir.as_ref().map(|p| loaded.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut manifest = manifest::Manifest::new(mode, &loaded.raw, seed, args.config.as_deref());
    let dir_ok = std::fs::create_dir_all(&out_dir).is_ok();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build();
    let result = match (dir_ok, pool) {
        (false, _) => Err(CliError::io(&out_dir, "cannot create output directory")),
        (true, Err(e)) => Err(CliError::Config(format!("thread pool: {e}"))),
        (true, Ok(pool)) => {
            let ctx = modes::Context { loaded: &loaded, seed, runs: args.runs, out_dir: &out_dir };
            pool.install(|| modes::run(mode, &ctx, &mut manifest))
        }
    };

    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("modeconv {mode}: {}", e.message());
            manifest.fail(e);
            e.code()
        }
    };
    if dir_ok {
        if let Err(e) = manifest.write(&out_dir) {
            eprintln!("modeconv: {}", e.message());
            return if code == 0 { e.code() } else { code };
        }
    }
    code
}
