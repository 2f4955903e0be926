//! Command line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 hypothesis violation, 4 pinching
//! violated, 5 search failure, 1 anything else (I/O, solver failure).

mod commands;
mod report;
mod suite;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_PINCHING_VIOLATED: i32 = 4;
pub const EXIT_SEARCH: i32 = 5;

pub const SEED_ENV: &str = "PINCHLAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    TorusScan,
    Epsilon,
    Verdict,
    PropertySuite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::TorusScan => "torus-scan",
            Command::Epsilon => "epsilon",
            Command::Verdict => "verdict",
            Command::PropertySuite => "property-suite",
        }
    }
}

/// Run configuration. Everything except the output path is echoed into
/// reports, so runs that differ only in destination produce identical bytes.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "pinchlab", version, about = "Sharp pinching bounds for submanifold data")]
pub struct RunConfig {
    /// Subcommand to run.
    #[arg(long, value_enum)]
    pub command: Command,

    /// Input file (JSON for check/epsilon, CSV for verdict).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Output file; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub output: String,

    /// RNG seed; the PINCHLAB_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Relative tolerance for S = a(n,p,H,c).
    #[arg(long = "tol.pinch", default_value_t = crate::verdict::DEFAULT_PINCH_TOL)]
    pub tol_pinch: f64,

    /// Eigenvalue cluster gap.
    #[arg(long = "tol.cluster", default_value_t = crate::pinching::DEFAULT_CLUSTER_TOL)]
    pub tol_cluster: f64,

    /// Relative threshold for counting an eigenvalue as negative.
    #[arg(long = "tol.index", default_value_t = crate::integral::DEFAULT_INDEX_TOL)]
    pub tol_index: f64,

    /// Sphere samples per integral (epsilon) or trials per property (property-suite).
    #[arg(long)]
    pub samples: Option<usize>,

    /// Restarts of the epsilon search.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,

    /// Iteration cap per restart of the epsilon search.
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    /// Tangent dimension; a list or range (`3:10`, `4,6`) for torus-scan.
    #[arg(long)]
    pub n: Option<String>,

    /// Form degree; a list or range for torus-scan.
    #[arg(long)]
    pub p: Option<String>,

    /// Codimension.
    #[arg(long)]
    pub k: Option<usize>,

    /// Ambient curvature lower bound.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,

    /// Radius grid `start:stop:step` or a comma list; `min` stands for sqrt(p/n).
    #[arg(long = "r-grid")]
    pub r_grid: Option<String>,

    /// Constant used by the Betti check of the epsilon command (default: the
    /// search estimate).
    #[arg(long = "eps-hat")]
    pub eps_hat: Option<f64>,
}

impl RunConfig {
    fn tolerances(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("cluster", self.tol_cluster),
            ("index", self.tol_index),
            ("pinch", self.tol_pinch),
        ])
    }

    fn validate(&self) -> Result<(), Failure> {
        for (name, v) in self.tolerances() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::input(format!("tolerance tol.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn other(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

pub(crate) type CmdResult = Result<i32, Failure>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Ok(raw) = std::env::var(SEED_ENV) {
        match raw.trim().parse::<u64>() {
            Ok(seed) => cfg.seed = seed,
            Err(_) => {
                eprintln!("error: {SEED_ENV}={raw:?} is not an unsigned integer");
                return EXIT_INPUT;
            }
        }
    }
    let outcome = cfg.validate().and_then(|_| match cfg.command {
        Command::Check => commands::check(&cfg),
        Command::TorusScan => commands::torus_scan(&cfg),
        Command::Epsilon => commands::epsilon(&cfg),
        Command::Verdict => commands::verdict(&cfg),
        Command::PropertySuite => suite::property_suite(&cfg),
    });
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[derive(Serialize)]
pub(crate) struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    tolerances: BTreeMap<&'static str, f64>,
    config: &'a RunConfig,
}

pub(crate) fn header(cfg: &RunConfig) -> Header<'_> {
    Header {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.name(),
        seed: cfg.seed,
        tolerances: cfg.tolerances(),
        config: cfg,
    }
}

pub(crate) fn read_input(cfg: &RunConfig) -> Result<String, Failure> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Failure::input(format!("--input is required for {}", cfg.command.name())))?;
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

/// Writes `contents` to the configured destination; files are replaced
/// atomically via a sibling temporary file.
pub(crate) fn write_output(cfg: &RunConfig, contents: &str) -> Result<(), Failure> {
    if cfg.output == "-" {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Failure::other(format!("cannot write to stdout: {e}")));
    }
    write_atomic(Path::new(&cfg.output), contents)
        .map_err(|e| Failure::other(format!("cannot write {}: {e}", cfg.output)))
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Parses `"3"`, `"3:10"` (inclusive) or `"3,5,7"`.
pub(crate) fn parse_int_list(raw: &str, name: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::input(format!("--{name}: cannot parse '{raw}'"));
    let raw = raw.trim();
    if let Some((a, b)) = raw.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    raw.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect()
}

pub(crate) fn single_int(raw: Option<&String>, name: &str) -> Result<usize, Failure> {
    let raw = raw.ok_or_else(|| Failure::input(format!("--{name} is required")))?;
    match parse_int_list(raw, name)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(Failure::input(format!("--{name} must be a single integer here"))),
    }
}
