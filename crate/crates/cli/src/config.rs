//! Experiment configuration: a TOML file with `[model]`, `[grid]`, `[mc]`,
//! `[mdp]` and `[assumptions]` sections, every field optional.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use sdde_core::model::{builtin, parse_model, CloudSpec};
use sdde_core::{CoefficientModel, HistorySegment, Path, Scheme, TimeGrid};

use crate::error::CliError;

pub const DEFAULT_LADDER: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub mdp: MdpSection,
    #[serde(default)]
    pub assumptions: AssumptionSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Built-in model name; defaults to `paper_sec1` when no file is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Model file, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Constant initial segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Initial segment as `t,component_0,...` rows on `[-tau, 0]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_ladder")]
    pub epsilons: Vec<f64>,
    /// Noise level for `simulate`; defaults to the first ladder entry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub first_substream: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Moment order.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Trajectories written by `simulate`.
    #[serde(default = "one_usize")]
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_rate_tol")]
    pub tol: f64,
    /// Target path CSV for `rate`, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_file: Option<PathBuf>,
    /// Target `f(t) = slope * max(t, 0)` for `rate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionSection {
    #[serde(default = "default_cloud_radius")]
    pub radius: f64,
    #[serde(default = "default_cloud_count")]
    pub count: usize,
    #[serde(default = "default_cloud_seed")]
    pub seed: u64,
    #[serde(default = "default_check_tol")]
    pub tol: f64,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_tau() -> f64 {
    0.25
}
fn default_dt() -> f64 {
    1e-3
}
fn default_ladder() -> Vec<f64> {
    DEFAULT_LADDER.to_vec()
}
fn default_n_traj() -> usize {
    2000
}
fn default_seed() -> u64 {
    42
}
fn default_p() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    0.25
}
fn default_rate_tol() -> f64 {
    sdde_core::mdp::DEFAULT_RATE_TOLERANCE
}
fn default_cloud_radius() -> f64 {
    CloudSpec::default().radius
}
fn default_cloud_count() -> usize {
    CloudSpec::default().count
}
fn default_cloud_seed() -> u64 {
    CloudSpec::default().seed
}
fn default_check_tol() -> f64 {
    sdde_core::model::DEFAULT_TOLERANCE
}

macro_rules! default_from_serde {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    )*};
}
default_from_serde!(GridSection, McSection, MdpSection, AssumptionSection);

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// A validated configuration with its inputs loaded.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub model: CoefficientModel,
    pub model_label: String,
    pub grid: TimeGrid,
    pub xi: HistorySegment,
}

impl Resolved {
    pub fn new(config: ExperimentConfig, base: &FsPath) -> Result<Self, CliError> {
        let (model, model_label, default_xi) = match (&config.model.name, &config.model.file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "model: give either `name` or `file`, not both".into(),
                ))
            }
            (_, Some(file)) => {
                let text = read(base, file)?;
                (parse_model(&text)?, file.display().to_string(), 0.0)
            }
            (name, None) => {
                let name = name.as_deref().unwrap_or("paper_sec1");
                (
                    builtin::by_name(name)?,
                    name.to_string(),
                    builtin::default_history_value(name),
                )
            }
        };
        let g = &config.grid;
        let grid = TimeGrid::new(g.horizon, g.tau, g.dt)?;
        let n = model.state_dim();
        let xi = match (&config.model.xi, &config.model.xi_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "model: give either `xi` or `xi_file`, not both".into(),
                ))
            }
            (_, Some(file)) => parse_history(&read(base, file)?, &grid, n)?,
            (value, None) => {
                HistorySegment::constant(&grid, &vec![value.unwrap_or(default_xi); n])?
            }
        };
        let mc = &config.mc;
        if mc.epsilons.is_empty() {
            return Err(CliError::Validation(
                "mc: the epsilon ladder is empty".into(),
            ));
        }
        if let Some(e) = mc
            .epsilons
            .iter()
            .chain(&mc.epsilon)
            .find(|e| !(**e > 0.0 && e.is_finite()))
        {
            return Err(CliError::Validation(format!(
                "mc: epsilon must be positive, got {e}"
            )));
        }
        if mc.n_traj < 2 {
            return Err(CliError::Validation("mc: n_traj must be at least 2".into()));
        }
        if mc.paths == 0 {
            return Err(CliError::Validation("mc: paths must be at least 1".into()));
        }
        if config.mdp.target_file.is_some() && config.mdp.target_slope.is_some() {
            return Err(CliError::Validation(
                "mdp: give either `target_file` or `target_slope`, not both".into(),
            ));
        }
        Ok(Self {
            config,
            model,
            model_label,
            grid,
            xi,
        })
    }

    /// Configured scheme, or the drift-based default.
    pub fn scheme(&self) -> Scheme {
        self.config
            .mc
            .scheme
            .unwrap_or_else(|| Scheme::default_for(&self.model))
    }

    /// Configured scheme, or explicit Euler for the CLT and skeleton pipelines.
    pub fn linearization_scheme(&self) -> Scheme {
        self.config.mc.scheme.unwrap_or(Scheme::Explicit)
    }

    pub fn target(&self, base: &FsPath) -> Result<Path, CliError> {
        let mdp = &self.config.mdp;
        let n = self.model.state_dim();
        match (&mdp.target_file, mdp.target_slope) {
            (Some(file), _) => Ok(Path::from_csv(&read(base, file)?, self.grid)?),
            (None, Some(s)) => Ok(Path::from_fn(self.grid, n, |t| vec![s * t.max(0.0); n])?),
            (None, None) => Err(CliError::Validation(
                "rate: set mdp.target_file or mdp.target_slope".into(),
            )),
        }
    }
}

fn read(base: &FsPath, file: &FsPath) -> Result<String, CliError> {
    let path = base.join(file);
    std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn parse_history(text: &str, grid: &TimeGrid, n: usize) -> Result<HistorySegment, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').skip(1).map(|v| v.trim().parse()).collect();
        let vals =
            vals.map_err(|e| CliError::Validation(format!("xi_file line {}: {e}", i + 1)))?;
        rows.push(vals);
    }
    if rows.len() != grid.lag_steps() + 1 {
        return Err(CliError::Validation(format!(
            "xi_file: expected {} rows on [-tau, 0], got {}",
            grid.lag_steps() + 1,
            rows.len()
        )));
    }
    Ok(HistorySegment::from_nodes(n, &rows)?)
}
