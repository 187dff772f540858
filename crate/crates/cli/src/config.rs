//! Resolved run configuration: defaults, optional flat key=value config file,
//! command-line flags on top.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Format::Text => "text",
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, clap::Args, Default)]
pub struct CommonArgs {
    /// Contraction ratio lambda, strictly between 0 and 1
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Branch count N_b, an integer >= 3 with lambda * N_b > 1
    #[arg(long)]
    pub nb: Option<u32>,
    /// Prefractal level m
    #[arg(long)]
    pub m: Option<u32>,
    /// First level of a range
    #[arg(long)]
    pub m_min: Option<u32>,
    /// Last level of a range
    #[arg(long)]
    pub m_max: Option<u32>,
    /// Series evaluation tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Work budget: vertices, columns or verified pairs
    #[arg(long)]
    pub budget: Option<u64>,
    /// Seed for sampled bound verification
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format (each command has a natural default)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overlay the level-m cell polygons on plots
    #[arg(long)]
    pub polygons: bool,
    /// Left endpoint of an oscillation interval
    #[arg(long)]
    pub x1: Option<f64>,
    /// Right endpoint of an oscillation interval
    #[arg(long)]
    pub x2: Option<f64>,
    /// Base sample count for oscillation estimates
    #[arg(long)]
    pub samples: Option<usize>,
    /// Flat key=value config file; command-line flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print evaluation diagnostics on stderr
    #[arg(long)]
    pub verbose: bool,
}

/// The fully resolved configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub nb: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
    pub tol: f64,
    pub budget: u64,
    pub seed: u64,
    pub format: String,
    pub polygons: bool,
    pub x1: f64,
    pub x2: f64,
    pub samples: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub verbose: bool,
}

impl RunConfig {
    /// One-line key=value echo, same syntax the config file accepts.
    pub fn echo(&self) -> String {
        let mut parts = vec![
            format!("lambda={}", self.lambda),
            format!("nb={}", self.nb),
        ];
        if let Some(m) = self.m {
            parts.push(format!("m={m}"));
        }
        if let Some(m) = self.m_min {
            parts.push(format!("m-min={m}"));
        }
        if let Some(m) = self.m_max {
            parts.push(format!("m-max={m}"));
        }
        parts.push(format!("tol={}", self.tol));
        parts.push(format!("budget={}", self.budget));
        parts.push(format!("seed={}", self.seed));
        parts.push(format!("format={}", self.format));
        parts.push(format!("polygons={}", self.polygons));
        parts.push(format!("x1={}", self.x1));
        parts.push(format!("x2={}", self.x2));
        parts.push(format!("samples={}", self.samples));
        parts.join(" ")
    }
}

fn parse_key<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("config key {key}: cannot parse {value:?}")))
}

/// Applies `key = value` lines from a config file onto unset args. Flags win
/// because only `None` fields are filled in.
fn apply_config_file(args: &mut CommonArgs, path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line not key=value: {raw:?}")))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "lambda" => {
                args.lambda.get_or_insert(parse_key(&key, value)?);
            }
            "nb" => {
                args.nb.get_or_insert(parse_key(&key, value)?);
            }
            "m" => {
                args.m.get_or_insert(parse_key(&key, value)?);
            }
            "m_min" => {
                args.m_min.get_or_insert(parse_key(&key, value)?);
            }
            "m_max" => {
                args.m_max.get_or_insert(parse_key(&key, value)?);
            }
            "tol" => {
                args.tol.get_or_insert(parse_key(&key, value)?);
            }
            "budget" => {
                args.budget.get_or_insert(parse_key(&key, value)?);
            }
            "seed" => {
                args.seed.get_or_insert(parse_key(&key, value)?);
            }
            "x1" => {
                args.x1.get_or_insert(parse_key(&key, value)?);
            }
            "x2" => {
                args.x2.get_or_insert(parse_key(&key, value)?);
            }
            "samples" => {
                args.samples.get_or_insert(parse_key(&key, value)?);
            }
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(value));
                }
            }
            "format" => {
                if args.format.is_none() {
                    args.format = Some(match value {
                        "text" => Format::Text,
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        "svg" => Format::Svg,
                        other => {
                            return Err(CliError::usage(format!("config format {other:?} unknown")))
                        }
                    });
                }
            }
            "polygons" => {
                args.polygons = args.polygons || parse_key::<bool>(&key, value)?;
            }
            "verbose" => {
                args.verbose = args.verbose || parse_key::<bool>(&key, value)?;
            }
            other => return Err(CliError::usage(format!("unknown config key {other:?}"))),
        }
    }
    Ok(())
}

/// Fills defaults and validates the parameter pair.
pub fn resolve(mut args: CommonArgs, default_format: Format) -> Result<(RunConfig, wboxdim_core::FractalParams), CliError> {
    if let Some(path) = args.config.clone() {
        apply_config_file(&mut args, &path)?;
    }
    let lambda = args
        .lambda
        .ok_or_else(|| CliError::usage("--lambda is required".into()))?;
    let nb = args.nb.ok_or_else(|| CliError::usage("--nb is required".into()))?;
    let params = wboxdim_core::FractalParams::new(lambda, nb).map_err(CliError::from_core)?;
    let format = args.format.unwrap_or(default_format);
    Ok((
        RunConfig {
            lambda,
            nb,
            m: args.m,
            m_min: args.m_min,
            m_max: args.m_max,
            tol: args.tol.unwrap_or(DEFAULT_TOL),
            budget: args.budget.unwrap_or(DEFAULT_BUDGET),
            seed: args.seed.unwrap_or(DEFAULT_SEED),
            format: format.to_string(),
            polygons: args.polygons,
            x1: args.x1.unwrap_or(0.0),
            x2: args.x2.unwrap_or(1.0),
            samples: args.samples.unwrap_or(DEFAULT_SAMPLES),
            out: args.out,
            verbose: args.verbose,
        },
        params,
    ))
}
