//! Flag definitions and their translation into library configs.

use clap::Args;
use manifold_consensus::algorithms::{GraphConfig, Method, StepSize};
use manifold_consensus::manifolds::{ManifoldSpec, RetractionScheme};
use manifold_consensus::mixing::GraphKind;
use std::path::PathBuf;

/// Failures carry the exit code the contract assigns them: 2 for
/// configuration problems, 3 for numerical ones.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 3,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::numerical(format!("i/o failure: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Args, Clone)]
pub struct ManifoldArgs {
    /// Manifold: stiefel | oblique | sphere | euclidean
    #[arg(long)]
    pub manifold: String,
    /// Ambient rows
    #[arg(long)]
    pub d: usize,
    /// Ambient columns (ignored for sphere)
    #[arg(long, default_value_t = 1)]
    pub r: usize,
}

impl ManifoldArgs {
    pub fn build(&self) -> CliResult<ManifoldSpec> {
        let spec = match self.manifold.as_str() {
            "stiefel" => {
                if self.d < self.r || self.r == 0 {
                    return Err(CliError::config(format!(
                        "stiefel needs d >= r >= 1, got d={} r={}",
                        self.d, self.r
                    )));
                }
                ManifoldSpec::stiefel(self.d, self.r)
            }
            "oblique" => ManifoldSpec::oblique(self.d, self.r),
            "sphere" => ManifoldSpec::sphere(self.d),
            "euclidean" => ManifoldSpec::euclidean(self.d, self.r),
            other => {
                return Err(CliError::config(format!(
                    "unknown manifold '{other}' (expected stiefel|oblique|sphere|euclidean)"
                )))
            }
        };
        Ok(spec)
    }
}

#[derive(Args, Clone)]
pub struct GraphArgs {
    /// Graph topology: random | star | cycle | complete
    #[arg(long)]
    pub graph: String,
    /// Agent count
    #[arg(long)]
    pub n: usize,
    /// Edge probability for random graphs
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

impl GraphArgs {
    pub fn kind(&self) -> CliResult<GraphKind> {
        match self.graph.as_str() {
            "random" => Ok(GraphKind::Random { p: self.p }),
            "star" => Ok(GraphKind::Star),
            "cycle" => Ok(GraphKind::Cycle),
            "complete" => Ok(GraphKind::Complete),
            other => Err(CliError::config(format!(
                "unknown graph '{other}' (expected random|star|cycle|complete)"
            ))),
        }
    }

    pub fn config(&self, seed: u64) -> CliResult<GraphConfig> {
        Ok(GraphConfig {
            kind: self.kind()?,
            n: self.n,
            seed,
        })
    }
}

/// Seed resolution: the flag wins, then the MC_SEED environment variable,
/// then zero.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("MC_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::config(format!("MC_SEED must be an integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

pub fn parse_method(s: &str) -> CliResult<Method> {
    match s {
        "rgd-qr" => Ok(Method::RgdQr),
        "rgd-polar" => Ok(Method::RgdPolar),
        "pgd" => Ok(Method::Pgd),
        other => Err(CliError::config(format!(
            "unknown method '{other}' (expected rgd-qr|rgd-polar|pgd)"
        ))),
    }
}

pub fn parse_alpha(s: &str) -> CliResult<StepSize> {
    match s {
        "1" | "unit" => Ok(StepSize::Unit),
        "two-over-l-plus-mu" => Ok(StepSize::TwoOverLPlusMu),
        other => match other.parse::<f64>() {
            Ok(v) if v > 0.0 => Ok(StepSize::Fixed(v)),
            _ => Err(CliError::config(format!(
                "alpha must be 'unit', 'two-over-l-plus-mu', or a positive number, got '{other}'"
            ))),
        },
    }
}

pub fn parse_scheme(s: &str) -> CliResult<RetractionScheme> {
    match s {
        "qr" => Ok(RetractionScheme::Qr),
        "polar" => Ok(RetractionScheme::Polar),
        other => Err(CliError::config(format!(
            "unknown retraction scheme '{other}' (expected qr|polar)"
        ))),
    }
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Method: rgd-qr | rgd-polar | pgd
    #[arg(long)]
    pub method: String,
    /// Step size: 1 | two-over-l-plus-mu | <positive float>
    #[arg(long, default_value = "1")]
    pub alpha: String,
    /// Gossip power t
    #[arg(long, default_value_t = 1)]
    pub t: u32,
    /// Master seed (graph and initialization); MC_SEED is the fallback
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initialization seed override (defaults to the master seed)
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Spread-controlled initialization radius (default: independent random
    /// blocks)
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Stopping tolerance on the normalized consensus error
    #[arg(long, default_value_t = 2e-16)]
    pub tol: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Artifact base name
    #[arg(long, default_value = "run")]
    pub name: String,
    /// Machine-readable summary on stdout
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct SuiteArgs {
    /// Built-in grid: figure2 | figure3 | figure4 | figure5 | figure6
    /// (omit when using --grid)
    pub name: Option<String>,
    /// User grid file: JSON array of {name, config} entries
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Paired repetitions of each cell
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Concurrent runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Iteration cap override for every run in the suite
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub manifold: ManifoldArgs,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 1)]
    pub t: u32,
    /// Near-consensus samples to draw
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Sup-norm error scale of the samples (cap is 2*eps)
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tube fraction for the Lipschitz-based inequalities
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Mixing weight of the combined secant inequality
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
    /// Retraction scheme for the fitted constants: qr | polar
    #[arg(long, default_value = "qr")]
    pub scheme: String,
    /// Draws for the constant fits
    #[arg(long, default_value_t = 240)]
    pub fit_samples: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Gossip powers to summarize (comma separated)
    #[arg(long, default_value = "1", value_delimiter = ',')]
    pub t: Vec<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Also write W as CSV and the summary as JSON under this directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}
