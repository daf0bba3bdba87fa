//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for unusable input (arguments, config,
//! operator descriptors), 3 when a computation fails or its quality checks
//! do not pass. In the last case whatever data was computed is still
//! written and the diagnostics go to stderr.

mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::schrodinger::PotentialSpec;
use commands::Outcome;
use config::{Config, OperatorConfig};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "XITRACE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "xitrace", version, about = "Spectral shift function and trace formula diagnostics")]
#[command(after_help = "Numbers are written with 12 significant digits. CSV output starts with `#` lines \
holding the schema version and the resolved config; JSON reports carry `schema_version` and `config` fields.\n\
Exit status: 0 ok, 2 bad input, 3 numerical failure. XITRACE_THREADS caps parallelism.")]
pub struct Cli {
    /// TOML config file.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a config entry, e.g. `--set xi.points=201`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Write `<command>.csv` / `<command>.json` here instead of stdout.
    #[arg(short, long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// xi(x, lambda) on a lambda grid from the boundary Green's function.
    ///
    /// CSV columns: lambda, xi, flag. `flag` is `ok`, `unconverged` (the
    /// eps extrapolation is unreliable, typically next to a jump) or
    /// `failed`. Config table `[xi]`; default operator: zero potential.
    Xi,
    /// Reconstruct V(x) or v(n) from xi.
    ///
    /// JSON report with the value, the exact potential value and the Abel
    /// diagnostics I(alpha). Confining potentials use shooting eigenvalues,
    /// periodic ones the band sum, other potentials a sampled xi; Jacobi
    /// operators use the exact counting formula. Config table `[trace]`;
    /// default operator: x^2 - 1.
    Trace,
    /// Band edges, Dirichlet eigenvalues and band-sum partial sums.
    ///
    /// CSV columns: band, lower, upper, gap_length, mu, gap_resolution,
    /// where the gap columns describe the gap above the band. The JSON
    /// report adds partial sums and the tail bound. Config table `[bands]`;
    /// default operator: 2 cos(x).
    Bands,
    /// Reflection coefficient and xi from scattering data.
    ///
    /// CSV columns: lambda, re_r, im_r, abs_r, abs_t, xi, bound_margin
    /// (|R|/2 - |xi - 1/2|), unitarity_defect, flag. Config table
    /// `[scatter]`; default operator: square well of depth 2 and width 2.
    Scatter,
    /// Almost-Mathieu spectrum measures over rational frequencies.
    ///
    /// CSV columns: coupling, p, q, alpha, measure, bound (4 - 2|coupling|),
    /// margin. Config table `[am]`.
    Am,
    /// Recover V(0) of an even confining potential from its eigenvalues.
    ///
    /// JSON report. Config table `[borg]`; default operator: x^2 - 1.
    Borg,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Xi => "xi",
            Command::Trace => "trace",
            Command::Bands => "bands",
            Command::Scatter => "scatter",
            Command::Am => "am",
            Command::Borg => "borg",
        }
    }

    fn default_operator(self) -> Option<OperatorConfig> {
        let spec = match self {
            Command::Xi => PotentialSpec::Zero,
            Command::Trace | Command::Borg => PotentialSpec::Harmonic { a: 1.0, b: -1.0 },
            Command::Bands => PotentialSpec::Mathieu { amplitude: 2.0 },
            Command::Scatter => PotentialSpec::SquareWell { depth: 2.0, width: 2.0 },
            Command::Am => return None,
        };
        Some(OperatorConfig::schrodinger(spec))
    }
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::NotShortRange(_) | Error::NotEven(_) => {
                Failure::Input(e.to_string())
            }
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Failure::Input(e.to_string()))
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let mut cfg = Config::load(cli.config.as_deref(), &cli.overrides)?;
    if cfg.operator.is_none() {
        cfg.operator = cli.command.default_operator();
    }
    let base_dir = cli.config.as_deref().and_then(Path::parent).unwrap_or(Path::new("."));
    let op = match cli.command {
        Command::Am => None,
        _ => cfg.operator.as_ref().map(|o| o.build(base_dir)).transpose()?,
    };
    let job = || -> crate::Result<Outcome> {
        match (cli.command, &op) {
            (Command::Xi, Some(op)) => commands::xi(&cfg, op),
            (Command::Trace, Some(op)) => commands::trace(&cfg, op),
            (Command::Bands, Some(op)) => commands::bands(&cfg, op),
            (Command::Scatter, Some(op)) => commands::scatter(&cfg, op),
            (Command::Borg, Some(op)) => commands::borg(&cfg, op),
            (Command::Am, _) => commands::am(&cfg),
            (_, None) => Err(Error::Config("no operator given".into())),
        }
    };
    let outcome = match thread_pool()? {
        Some(pool) => pool.install(job),
        None => job(),
    }?;
    Ok(outcome)
}

fn emit(cli: &Cli, outcome: &Outcome) -> std::io::Result<()> {
    let name = cli.command.name();
    match &cli.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            if let Some(csv) = &outcome.csv {
                std::fs::write(dir.join(format!("{name}.csv")), csv)?;
            }
            if let Some(json) = &outcome.json {
                std::fs::write(dir.join(format!("{name}.json")), json)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for text in [&outcome.csv, &outcome.json].into_iter().flatten() {
                out.write_all(text.as_bytes())?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match execute(&cli) {
        Ok(outcome) => outcome,
        Err(Failure::Input(msg)) => {
            eprintln!("xitrace: {msg}");
            return 2;
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("xitrace: numerical failure: {msg}");
            return 3;
        }
    };
    if let Err(e) = emit(&cli, &outcome) {
        eprintln!("xitrace: cannot write output: {e}");
        return 2;
    }
    for p in &outcome.problems {
        eprintln!("xitrace: quality check failed: {p}");
    }
    if outcome.problems.is_empty() { 0 } else { 3 }
}
