//! Run configuration: command-line flags merged over an optional TOML or JSON
//! file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkelly::family::Halfspace;
use qkelly::problem::{validate_instance, Number, ProblemInstance, RawInstance};
use qkelly::solver::RestrictedFamily;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "qkelly", version, about = "Finite-horizon upper-quantile Kelly solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Surface,
    Verify,
    Sweep,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal wealth profile and print a JSON report.
    Solve(Flags),
    /// Quantile values over a lattice of the wealth simplex (m = 2 or 3).
    Surface(Flags),
    /// Compare the exact solve with the grid oracle and Monte Carlo.
    Verify(Flags),
    /// Solve the base instance across horizons.
    Sweep(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Solve(f) => (CommandKind::Solve, f),
            Command::Surface(f) => (CommandKind::Surface, f),
            Command::Verify(f) => (CommandKind::Verify, f),
            Command::Sweep(f) => (CommandKind::Sweep, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Outcome probabilities, comma separated ("0.6,0.4" or "3/5,2/5").
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<String>>,
    /// State prices, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<String>>,
    /// Horizon.
    #[arg(long)]
    pub n: Option<u32>,
    /// Quantile level in (0, 1).
    #[arg(long)]
    pub alpha: Option<String>,
    /// TOML or JSON file with the same fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lattice resolution for the grid oracle or surface.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep horizons, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u32>>,
    /// Extra constraint "a1,...,am<=b" on the wealth profile; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub family: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// A number in a config file: a literal string or a plain number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Literal {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Literal {
    fn text(&self) -> String {
        match self {
            Literal::Text(s) => s.clone(),
            Literal::Int(i) => i.to_string(),
            // Shortest round-trip decimal, so 0.6 reads back as 3/5.
            Literal::Float(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<usize>,
    p: Option<Vec<Literal>>,
    q: Option<Vec<Literal>>,
    n: Option<u32>,
    alpha: Option<Literal>,
    resolution: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    horizons: Option<Vec<u32>>,
    #[serde(default)]
    family: Vec<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("`{0}` is out of range: {1}")]
    Range(&'static str, String),
    #[error("format {0:?} is not available for this command")]
    Format(Format),
    #[error(transparent)]
    Core(#[from] qkelly::Error),
}

pub const MAX_RESOLUTION: usize = 5000;
pub const MAX_SAMPLES: usize = 100_000_000;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_GRID_RESOLUTION: usize = 600;
pub const DEFAULT_SURFACE_RESOLUTION: usize = 200;

/// Validated configuration for one run.
#[derive(Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub instance: ProblemInstance,
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
    pub horizons: Vec<u32>,
    pub family: Option<RestrictedFamily>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| ConfigError::Parse {
        path: path.to_path_buf(),
        message,
    };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
    }
}

fn numbers(xs: &[String]) -> Result<Vec<Number>, ConfigError> {
    xs.iter()
        .map(|s| Number::parse(s).map_err(|e| ConfigError::Core(e.into())))
        .collect()
}

impl RunConfig {
    pub fn resolve(command: CommandKind, flags: Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let texts = |v: Option<Vec<Literal>>| v.map(|xs| xs.iter().map(Literal::text).collect::<Vec<_>>());
        let p = flags.p.or(texts(file.p)).ok_or(ConfigError::Missing("p"))?;
        let q = flags.q.or(texts(file.q)).ok_or(ConfigError::Missing("q"))?;
        let horizons = flags.horizons.or(file.horizons);
        // A sweep sets its own horizons; n only has to be valid.
        let sweep_n = match command {
            CommandKind::Sweep => Some(horizons.as_ref().and_then(|h| h.first().copied()).unwrap_or(1)),
            _ => None,
        };
        let n = flags.n.or(file.n).or(sweep_n).ok_or(ConfigError::Missing("n"))?;
        let alpha = flags
            .alpha
            .or(file.alpha.map(|a| a.text()))
            .ok_or(ConfigError::Missing("alpha"))?;
        let m = file.m.unwrap_or(p.len());
        let instance = validate_instance(&RawInstance {
            m,
            p: numbers(&p)?,
            q: numbers(&q)?,
            n,
            alpha: Number::parse(&alpha).map_err(|e| ConfigError::Core(e.into()))?,
        })?;

        let default_resolution = match command {
            CommandKind::Surface => DEFAULT_SURFACE_RESOLUTION,
            _ => DEFAULT_GRID_RESOLUTION,
        };
        let resolution = flags.resolution.or(file.resolution).unwrap_or(default_resolution);
        if !(1..=MAX_RESOLUTION).contains(&resolution) {
            return Err(ConfigError::Range("resolution", format!("{resolution} not in 1..={MAX_RESOLUTION}")));
        }
        let samples = flags.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
        if !(1..=MAX_SAMPLES).contains(&samples) {
            return Err(ConfigError::Range("samples", format!("{samples} not in 1..={MAX_SAMPLES}")));
        }
        let seed = flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let horizons = match horizons {
            Some(h) => h,
            None => match instance.m() {
                2 => (1..=39).step_by(2).collect(),
                _ => (1..=qkelly::verify::SWEEP_MAX_N_TERNARY).collect(),
            },
        };

        let family_text = if flags.family.is_empty() { file.family } else { flags.family };
        let halfspaces = family_text
            .iter()
            .map(|s| s.parse::<Halfspace>())
            .collect::<Result<Vec<_>, _>>()?;
        for h in &halfspaces {
            if h.a.len() != instance.m() {
                return Err(qkelly::Error::FamilyDimension {
                    expected: instance.m(),
                    got: h.a.len(),
                }
                .into());
            }
        }
        let family = (!halfspaces.is_empty()).then(|| RestrictedFamily::new(halfspaces));

        let format = flags.format.or(file.format).unwrap_or(match command {
            CommandKind::Solve | CommandKind::Verify => Format::Json,
            CommandKind::Surface | CommandKind::Sweep => Format::Csv,
        });
        if format == Format::Csv && matches!(command, CommandKind::Solve | CommandKind::Verify) {
            return Err(ConfigError::Format(format));
        }
        Ok(RunConfig {
            command,
            instance,
            resolution,
            samples,
            seed,
            horizons,
            family,
            out: flags.out.or(file.out),
            format,
        })
    }
}
