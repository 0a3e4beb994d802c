use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::FamilyConfig;
use crate::graph::GraphParams;

pub const EXPERIMENT_SCHEMA: &str = "cls-exp-1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSettings {
    pub eps: f64,
    #[serde(default = "default_minus")]
    pub lambda_minus: f64,
    #[serde(default = "default_zero")]
    pub lambda_zero: f64,
    #[serde(default = "default_plus")]
    pub lambda_plus: f64,
    /// Defaults to `3 h₀` of each space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop: Option<f64>,
    /// Defaults to `λ₋ ε / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_alpha: Option<f64>,
}

fn default_minus() -> f64 {
    0.25
}
fn default_zero() -> f64 {
    0.5
}
fn default_plus() -> f64 {
    2.0
}

impl GraphSettings {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            lambda_minus: default_minus(),
            lambda_zero: default_zero(),
            lambda_plus: default_plus(),
            hop: None,
            theta_alpha: None,
        }
    }

    pub fn params_for(&self, default_hop: f64) -> GraphParams {
        let mut p = GraphParams::with_lambdas(
            self.eps,
            self.hop.unwrap_or(default_hop),
            self.lambda_minus,
            self.lambda_zero,
            self.lambda_plus,
        );
        if let Some(t) = self.theta_alpha {
            p.theta_alpha = t;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhSetting {
    Off,
    Exact,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhSettings {
    pub mode: GhSetting,
    pub effort: usize,
    /// Net size used for GH estimates between consecutive members.
    pub landmarks: usize,
}

impl Default for GhSettings {
    fn default() -> Self {
        Self {
            mode: GhSetting::Upper,
            effort: 4,
            landmarks: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub count: usize,
    /// Relative slack of the upper check.
    pub tau: f64,
    /// Members at the end of the schedule used for the lower floor.
    pub tail: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            count: 20,
            tau: 0.05,
            tail: 3,
        }
    }
}

/// Experiment document (`cls-exp-1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: String,
    pub name: String,
    pub family: FamilyConfig,
    pub eps_grid: Vec<f64>,
    pub graph: GraphSettings,
    #[serde(default)]
    pub gh: GhSettings,
    /// Pointed mode: restrict member regular sets to `B(x_k, R)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<ProbeSettings>,
    /// Leaf counts expected of the limit graph's stars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_ends: Option<Vec<usize>>,
    /// Leaf counts expected of every member graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member_ends: Option<Vec<usize>>,
    #[serde(default = "default_true")]
    pub plots: bool,
    pub output: PathBuf,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

pub const PRESET_NAMES: [&str; 5] = [
    "tori-collapse",
    "cr-cusp",
    "chain-m3",
    "s2-dumbbell",
    "s2-oscillate",
];

impl ExperimentConfig {
    pub fn new(name: &str, family: FamilyConfig, eps_grid: Vec<f64>, graph_eps: f64, output: PathBuf) -> Self {
        let seed = family.seed;
        Self {
            schema: EXPERIMENT_SCHEMA.to_string(),
            name: name.to_string(),
            family,
            eps_grid,
            graph: GraphSettings::new(graph_eps),
            gh: GhSettings::default(),
            radius: None,
            probes: None,
            limit_ends: None,
            member_ends: None,
            plots: true,
            output,
            seed,
        }
    }

    /// Shipped experiment for a preset family.
    pub fn preset(name: &str, output: impl Into<PathBuf>) -> Option<Self> {
        let family = FamilyConfig::preset(name)?;
        let output = output.into();
        let cfg = match name {
            "tori-collapse" => {
                let mut c = Self::new(name, family, vec![0.1], 0.01, output);
                c.member_ends = Some(vec![0]);
                c
            }
            "cr-cusp" => {
                let mut c = Self::new(name, family, vec![0.2], 0.05, output);
                c.member_ends = Some(vec![2]);
                c
            }
            "chain-m3" => {
                let mut c = Self::new(name, family, vec![0.02, 0.05], 0.01, output);
                c.limit_ends = Some(vec![2, 2, 2]);
                c
            }
            "s2-dumbbell" | "s2-oscillate" => {
                let mut c = Self::new(name, family, vec![0.05, 0.1, 0.2], 0.2, output);
                c.limit_ends = Some(vec![1, 1]);
                c.probes = Some(ProbeSettings::default());
                c
            }
            _ => return None,
        };
        Some(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != EXPERIMENT_SCHEMA {
            return Err(Error::Schema(format!(
                "expected schema {EXPERIMENT_SCHEMA}, found {}",
                self.schema
            )));
        }
        self.family.validate()?;
        if self.eps_grid.is_empty() {
            return Err(Error::InvalidParams("eps_grid is empty".into()));
        }
        if let Some(bad) = self.eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParams(format!("eps_grid entries must be positive, got {bad}")));
        }
        self.graph.params_for(1.0).validate()?;
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(Error::NonPositiveRadius(r));
            }
        }
        if let Some(p) = &self.probes {
            if p.count == 0 || p.tail == 0 || !(p.tau >= 0.0) {
                return Err(Error::InvalidParams("probes need count, tail > 0 and tau >= 0".into()));
            }
        }
        if self.gh.mode != GhSetting::Off && self.gh.landmarks < 2 {
            return Err(Error::InvalidParams("gh.landmarks must be at least 2".into()));
        }
        if self.output.as_os_str().is_empty() {
            return Err(Error::InvalidParams("output directory is empty".into()));
        }
        if self.output.is_file() {
            return Err(Error::InvalidParams(format!(
                "output {} is a file",
                self.output.display()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment configs are plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
