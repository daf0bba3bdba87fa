//! Run configuration: a TOML file with one table per subcommand plus an
//! `[operator]` descriptor, patched by `--set key.path=value` overrides.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::jacobi::{Diagonal, JacobiOperator};
use crate::schrodinger::{Potential, PotentialSpec};
use crate::xi::DEFAULT_EPS_SCHEDULE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    /// Exactly one of `potential` (a builtin descriptor) and `file`
    /// (two-column samples) must be given.
    Schrodinger {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        potential: Option<PotentialSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
    },
    Jacobi { diagonal: Diagonal },
}

#[derive(Debug)]
pub enum Operator {
    Schrodinger(Potential),
    Jacobi(JacobiOperator),
}

impl OperatorConfig {
    pub fn schrodinger(spec: PotentialSpec) -> Self {
        OperatorConfig::Schrodinger { potential: Some(spec), file: None }
    }

    /// Relative sample paths are taken relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Operator> {
        match self {
            OperatorConfig::Schrodinger { potential: Some(spec), file: None } => {
                Ok(Operator::Schrodinger(Potential::new(spec.clone())?))
            }
            OperatorConfig::Schrodinger { potential: None, file: Some(path) } => {
                let path = base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                Ok(Operator::Schrodinger(Potential::sampled_from_str(&text)?))
            }
            OperatorConfig::Schrodinger { .. } => {
                Err(Error::Config("schrodinger operator needs exactly one of `potential` and `file`".into()))
            }
            OperatorConfig::Jacobi { diagonal } => Ok(Operator::Jacobi(JacobiOperator::new(diagonal.clone())?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XiSection {
    /// Base point for continuum operators.
    pub x: f64,
    /// Base site for Jacobi operators.
    pub site: i64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub eps_schedule: Vec<f64>,
}

impl Default for XiSection {
    fn default() -> Self {
        Self { x: 0.0, site: 0, lambda_min: -1.0, lambda_max: 5.0, points: 121, eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    pub x: f64,
    pub site: i64,
    /// Eigenvalue count for confining potentials.
    pub n_max: usize,
    /// Band count for periodic potentials.
    pub n_bands: usize,
    /// Sampling of `xi` for the remaining continuum potentials.
    pub lambda_max: f64,
    pub points: usize,
    pub eps_schedule: Vec<f64>,
    /// Damping values; empty selects the default schedule.
    pub alphas: Vec<f64>,
    pub cutoff: Option<f64>,
    /// Truncation half-width for Jacobi operators.
    pub window: i64,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            x: 0.0,
            site: 0,
            n_max: 80,
            n_bands: 8,
            lambda_max: 60.0,
            points: 1201,
            eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec(),
            alphas: Vec::new(),
            cutoff: None,
            window: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSection {
    pub x: f64,
    pub n_bands: usize,
}

impl Default for BandsSection {
    fn default() -> Self {
        Self { x: 0.0, n_bands: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterSection {
    pub x: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Slack allowed in `|xi - 1/2| <= |R|/2`.
    pub bound_tol: f64,
    pub unitarity_tol: f64,
}

impl Default for ScatterSection {
    fn default() -> Self {
        Self { x: 0.0, lambda_min: 0.05, lambda_max: 10.0, points: 200, bound_tol: 1e-8, unitarity_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmSection {
    pub couplings: Vec<f64>,
    /// All reduced `p/q` with `q <= q_max`, unless `frequencies` is set.
    pub q_max: i64,
    pub frequencies: Vec<(i64, i64)>,
    pub bound_tol: f64,
}

impl Default for AmSection {
    fn default() -> Self {
        Self { couplings: vec![0.5, 1.0, 1.5], q_max: 13, frequencies: Vec::new(), bound_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BorgSection {
    pub n_max: usize,
}

impl Default for BorgSection {
    fn default() -> Self {
        Self { n_max: 80 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    pub xi: XiSection,
    pub trace: TraceSection,
    pub bands: BandsSection,
    pub scatter: ScatterSection,
    pub am: AmSection,
    pub borg: BorgSection,
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad key path `{path}`")));
    }
    let mut table = root;
    for key in &keys[..keys.len() - 1] {
        let entry = table.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` in `{path}` is not a table")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        Config::deserialize(toml::Value::Table(root)).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}
