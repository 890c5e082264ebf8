mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use summer_core::config::ConfigError;
use summer_core::dictionaries::{DictError, SearchMode};
use summer_core::eval::{Algorithm, EvalError};
use summer_core::scene::Axis;
use summer_core::synthesis::SnrDefinition;

/// Sub-Nyquist MIMO radar experiments.
#[derive(Debug, Parser)]
#[command(name = "summer", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Radar configuration (TOML). Defaults to the preset of `--scale`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-path override applied to the configuration, e.g. `array.m=6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed for scenes, noise and random draws.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated SNR points in dB; `inf` means noiseless.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_snr)]
    pub snr_list: Option<Vec<f64>>,
    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    /// summer, classic, classic_cdma or multi_carrier.
    #[arg(long, default_value = "summer", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    #[arg(long, value_enum, default_value_t = SnrKind::SingleBand)]
    pub snr_definition: SnrKind,
    /// Directory receiving the artifacts and the manifest.
    #[arg(long, short, default_value = "summer-out")]
    pub output: PathBuf,
    /// Configuration text taken from a manifest instead of `--config`.
    #[arg(skip)]
    pub config_text: Option<String>,
}

fn parse_snr(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_nan() || v == f64::NEG_INFINITY => Err(format!("`{s}` is not a usable SNR")),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("`{s}` is not a number or `inf`")),
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| format!("unknown algorithm `{s}`; expected summer, classic, classic_cdma or multi_carrier"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SnrKind {
    SingleBand,
    CdmaEquivalent,
}

impl From<SnrKind> for SnrDefinition {
    fn from(k: SnrKind) -> Self {
        match k {
            SnrKind::SingleBand => SnrDefinition::SingleBand,
            SnrKind::CdmaEquivalent => SnrDefinition::CdmaEquivalent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Range,
    Azimuth,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Range => Axis::Range,
            AxisArg::Azimuth => Axis::Azimuth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sampling,
    Geometry,
    Both,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sampling => SearchMode::Sampling,
            ModeArg::Geometry => SearchMode::Geometry,
            ModeArg::Both => SearchMode::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover one random scene and list truth and estimates.
    Fig5Map {
        #[arg(long)]
        targets: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Hit-rate curves for K = N, N/2 and N/4.
    FigTimeCompression {
        #[arg(long, default_value_t = 3)]
        targets: usize,
        /// Redraw positions, carriers and indices in every trial.
        #[arg(long)]
        redraw: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Close-pair resolution with and without spatial compression.
    FigResolution {
        #[arg(long, value_enum, default_value_t = AxisArg::Azimuth)]
        axis: AxisArg,
        #[command(flatten)]
        common: Common,
    },
    /// Multi-carrier SUMMeR against the uncompressed array.
    FigMulticarrier {
        #[arg(long, default_value_t = 2)]
        gamma: usize,
        /// Fourier indices per band; defaults to N/2.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 3)]
        targets: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force spark check of the Kronecker stacking.
    Lemma1Check {
        #[arg(long, default_value_t = 50)]
        random: usize,
        #[arg(long, default_value_t = 10)]
        planted: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized search for low-coherence sampling and array draws.
    CoherenceSearch {
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        /// Number of random draws.
        #[arg(long, default_value_t = 200)]
        draws: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Recover the targets of a scene file.
    Recover {
        #[arg(long)]
        scene: PathBuf,
        /// SNR in dB, or `inf`.
        #[arg(long, default_value = "inf", allow_hyphen_values = true, value_parser = parse_snr)]
        snr: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sample and antenna count conditions for L targets.
    CheckConditions {
        #[arg(long, default_value_t = 4)]
        targets: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(c) => c.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<DictError> for Failure {
    fn from(e: DictError) -> Self {
        match e {
            DictError::Config(c) => c.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::dispatch(cli.command, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
