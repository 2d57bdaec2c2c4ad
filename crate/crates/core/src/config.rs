//! TOML system description.
//!
//! ```toml
//! [graph]
//! nodes = [{ id = 1, lambda = 0.815, class = "stable" }]
//! edges = [{ from = 1, to = 1, mu = 1.0 }]
//! ```
//!
//! The graph block alone suffices for analysis and synthesis; the other
//! blocks are optional and checked by the commands that need them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsFamily, SubsystemMap};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SubsystemNode, SwitchedDigraph, TransitionEdge, Walk, DEFAULT_CONTRACTIVE_MARGIN};
use crate::lyapunov::{ClassK, Gain, LyapunovFunction, LyapunovProfile, SampleBox, SampleSet, DEFAULT_VERIFY_TOL};
use crate::sim::{InputSignal, StateBox};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("config is missing the [{0}] block")]
    Missing(&'static str),
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub graph: GraphConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub nodes: Vec<SubsystemNode>,
    pub edges: Vec<TransitionEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsConfig {
    NonlinearPair,
    Scalar { subsystems: Vec<ScalarEntry> },
    Linear { subsystems: Vec<LinearEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarEntry {
    pub id: NodeId,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearEntry {
    pub id: NodeId,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub alpha_lower: ClassK,
    pub alpha_upper: ClassK,
    /// Per-subsystem gains, reduced to their pointwise max.
    pub gamma: Vec<ClassK>,
    pub functions: Vec<FunctionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub id: NodeId,
    #[serde(flatten)]
    pub function: LyapunovFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub x0_box: Vec<(f64, f64)>,
    pub count: usize,
    pub horizon: u64,
    pub seed: u64,
    pub input: InputConfig,
}

/// Input specification; uniform draws take their seed from the simulation
/// block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    Zero,
    Constant { value: Vec<f64> },
    Uniform { bounds: Vec<(f64, f64)> },
    Explicit { values: Vec<Vec<f64>> },
}

impl InputConfig {
    pub fn signal(&self, seed: u64) -> InputSignal {
        match self {
            Self::Zero => InputSignal::Zero,
            Self::Constant { value } => InputSignal::Constant { value: value.clone() },
            Self::Uniform { bounds } => InputSignal::Uniform { bounds: bounds.clone(), seed },
            Self::Explicit { values } => InputSignal::Explicit { values: values.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    pub state_box: Vec<(f64, f64)>,
    #[serde(default)]
    pub input_box: Vec<(f64, f64)>,
    #[serde(default)]
    pub grid_per_axis: usize,
    #[serde(default)]
    pub random_count: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_verify")]
    pub verify: f64,
    #[serde(default = "default_margin")]
    pub contractive_margin: f64,
}

fn default_verify() -> f64 {
    DEFAULT_VERIFY_TOL
}

fn default_margin() -> f64 {
    DEFAULT_CONTRACTIVE_MARGIN
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { verify: default_verify(), contractive_margin: default_margin() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub x0_norm: f64,
    pub v_sup: f64,
    #[serde(default = "default_t_max")]
    pub t_max: u64,
}

fn default_t_max() -> u64 {
    100
}

/// Fixed base walk to use instead of searching for one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub walk: Vec<NodeId>,
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> std::result::Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn build_graph(&self) -> Result<SwitchedDigraph> {
        SwitchedDigraph::new(&self.graph.nodes, &self.graph.edges)
    }

    pub fn build_family(&self) -> std::result::Result<DynamicsFamily, ConfigError> {
        let maps: BTreeMap<NodeId, SubsystemMap> = match self.dynamics.as_ref().ok_or(ConfigError::Missing("dynamics"))? {
            DynamicsConfig::NonlinearPair => return Ok(DynamicsFamily::nonlinear_pair()),
            DynamicsConfig::Scalar { subsystems } => {
                subsystems.iter().map(|e| (e.id, SubsystemMap::Scalar { a: e.a })).collect()
            }
            DynamicsConfig::Linear { subsystems } => subsystems
                .iter()
                .map(|e| (e.id, SubsystemMap::Linear { a: e.a.clone(), b: e.b.clone() }))
                .collect(),
        };
        Ok(DynamicsFamily::new(maps)?)
    }

    pub fn build_profile(&self, g: &SwitchedDigraph) -> std::result::Result<LyapunovProfile, ConfigError> {
        let p = self.profile.as_ref().ok_or(ConfigError::Missing("profile"))?;
        let functions = p.functions.iter().map(|f| (f.id, f.function.clone())).collect();
        let check = |k: &ClassK| ClassK::new(k.coef, k.exponent);
        let gamma = Gain::new(p.gamma.iter().map(check).collect::<Result<_>>()?)?;
        Ok(LyapunovProfile::new(g, functions, check(&p.alpha_lower)?, check(&p.alpha_upper)?, gamma)?)
    }

    pub fn build_samples(&self) -> std::result::Result<SampleSet, ConfigError> {
        let v = self.verification.as_ref().ok_or(ConfigError::Missing("verification"))?;
        let bounds = SampleBox { state: v.state_box.clone(), input: v.input_box.clone() };
        Ok(SampleSet::grid_and_random(bounds, v.grid_per_axis, v.random_count, v.seed)?)
    }

    pub fn simulation(&self) -> std::result::Result<&SimulationConfig, ConfigError> {
        self.simulation.as_ref().ok_or(ConfigError::Missing("simulation"))
    }

    pub fn x0_box(&self) -> std::result::Result<StateBox, ConfigError> {
        Ok(StateBox(self.simulation()?.x0_box.clone()))
    }

    pub fn fixed_walk(&self) -> Option<Result<Walk>> {
        self.signal.as_ref().map(|s| Walk::new(s.walk.clone()))
    }
}
