use std::path::{Path, PathBuf};

use distreg_core::construct::{shipped_target, TargetFunctional};
use distreg_core::theory::RHatVariant;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GenData,
    Construct,
    ApproxRate,
    LearnRate,
    CoverBound,
    Decompose,
    Train,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::GenData => "gen-data",
            Self::Construct => "construct",
            Self::ApproxRate => "approx-rate",
            Self::LearnRate => "learn-rate",
            Self::CoverBound => "cover-bound",
            Self::Decompose => "decompose",
            Self::Train => "train",
        }
    }
}

/// One experiment's settings. Every field is optional in the file; unset
/// grids fall back to per-experiment defaults, explicitly empty grids are
/// rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    pub experiment: Option<Experiment>,
    /// Target id: shipped or from `custom_targets`.
    pub target: Option<String>,
    /// Targets for `approx-rate` and `construct`; defaults to `[target]`.
    pub targets: Option<Vec<String>>,
    pub custom_targets: Vec<TargetFunctional>,
    /// Network resolution `N` grid.
    pub n_grid: Option<Vec<usize>>,
    /// First-stage sizes for `learn-rate`.
    pub m_grid: Option<Vec<usize>>,
    pub eps_grid: Option<Vec<f64>>,
    /// First-stage size for `gen-data`, `train` and `decompose`.
    pub m: Option<usize>,
    /// Second-stage size.
    pub n: Option<usize>,
    pub noise: Option<f64>,
    pub epochs: Option<usize>,
    pub step: Option<f64>,
    pub batch: Option<usize>,
    pub mc_size: Option<usize>,
    pub runs: Option<usize>,
    /// Replaces `A₄` in `N = ⌊A₄ m^{1/(2β+1)}⌋`.
    pub big_n_coef: Option<f64>,
    /// Replaces `A₅` in `n = ⌈A₅ m^{(4β+17)/(2β+1)}⌉`.
    pub n_coef: Option<f64>,
    /// Upper limit on the second-stage size chosen by `learn-rate`.
    pub n_cap: Option<usize>,
    /// Hypothesis-space radius; defaults to the construction's.
    pub radius: Option<f64>,
    pub dim: Option<usize>,
    pub degree: Option<usize>,
    pub r_hat: Option<RHatVariant>,
    /// Dataset directory read by `train`.
    pub data: Option<PathBuf>,
    /// Where `train` writes the trained network.
    pub net_out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Command-line overrides; each beats the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

pub const DEFAULT_TARGET: &str = "poly-quadratic";

fn grid<T: Clone>(field: &'static str, v: &Option<Vec<T>>, default: &[T]) -> Result<Vec<T>, CliError> {
    match v {
        None => Ok(default.to_vec()),
        Some(g) if g.is_empty() => Err(CliError::config(field, "grid is empty")),
        Some(g) => Ok(g.clone()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies overrides and checks the experiment tag.
    pub fn resolve(mut self, experiment: Experiment, ov: &Overrides) -> Result<Self, CliError> {
        match self.experiment {
            Some(e) if e != experiment => {
                return Err(CliError::config(
                    "experiment",
                    &format!("config is for `{}`, not `{}`", e.name(), experiment.name()),
                ))
            }
            _ => self.experiment = Some(experiment),
        }
        if ov.seed.is_some() {
            self.seed = ov.seed;
        }
        if ov.out.is_some() {
            self.out = ov.out.clone();
        }
        if ov.jobs.is_some() {
            self.jobs = ov.jobs;
        }
        if self.jobs == Some(0) {
            return Err(CliError::config("jobs", "must be positive"));
        }
        Ok(self)
    }

    /// SHA-256 of the settings that determine the output; `out` and `jobs`
    /// are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.jobs = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn find_target(&self, id: &str, field: &'static str) -> Result<TargetFunctional, CliError> {
        self.custom_targets
            .iter()
            .find(|t| t.id == id)
            .cloned()
            .or_else(|| shipped_target(id))
            .ok_or_else(|| CliError::config(field, &format!("unknown target id `{id}`")))
    }

    pub fn target(&self) -> Result<TargetFunctional, CliError> {
        self.find_target(self.target.as_deref().unwrap_or(DEFAULT_TARGET), "target")
    }

    pub fn targets(&self) -> Result<Vec<TargetFunctional>, CliError> {
        match &self.targets {
            None => Ok(vec![self.target()?]),
            Some(ids) if ids.is_empty() => Err(CliError::config("targets", "list is empty")),
            Some(ids) => ids.iter().map(|id| self.find_target(id, "targets")).collect(),
        }
    }

    pub fn n_grid(&self, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let g = grid("n_grid", &self.n_grid, default)?;
        if g.contains(&0) {
            return Err(CliError::config("n_grid", "resolutions must be at least 1"));
        }
        Ok(g)
    }

    pub fn m_grid(&self, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let g = grid("m_grid", &self.m_grid, default)?;
        if g.contains(&0) {
            return Err(CliError::config("m_grid", "sample sizes must be at least 1"));
        }
        Ok(g)
    }

    pub fn eps_grid(&self, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let g = grid("eps_grid", &self.eps_grid, default)?;
        if g.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::config("eps_grid", "ε must be positive"));
        }
        Ok(g)
    }

    pub fn positive(&self, field: &'static str, v: Option<usize>, default: usize) -> Result<usize, CliError> {
        match v.unwrap_or(default) {
            0 => Err(CliError::config(field, "must be positive")),
            x => Ok(x),
        }
    }

    pub fn noise(&self) -> Result<f64, CliError> {
        match self.noise.unwrap_or(0.0) {
            s if s >= 0.0 && s.is_finite() => Ok(s),
            s => Err(CliError::config("noise", &format!("{s} must be >= 0"))),
        }
    }

    pub fn step(&self, default: f64) -> Result<f64, CliError> {
        match self.step.unwrap_or(default) {
            s if s > 0.0 && s.is_finite() => Ok(s),
            s => Err(CliError::config("step", &format!("{s} must be positive"))),
        }
    }
}
