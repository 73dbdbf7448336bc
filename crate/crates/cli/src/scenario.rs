//! Scenario files.
//!
//! A scenario is one TOML document:
//!
//! ```toml
//! name = "paper_k4"
//! x0 = [1.0, 2.0, 3.0, 4.0]
//! T = 2.0
//! steps = 400
//! attack = { link = { ell = 2 } }
//!
//! [topology]
//! n = 4
//! edges = [[1, 2, 0.0326], [1, 3, 0.5525]]
//!
//! [kernel]
//! constant = 1.0
//! ```
//!
//! `topology` may instead be a path to a file holding just `n` and `edges`,
//! resolved relative to the scenario file. Nodes are 1-based in files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use consensus_attack_core::dynamics::{Kernel, TimeGrid};
use consensus_attack_core::model::NetworkTopology;
use consensus_attack_core::noise::{setup_for, NoiseParams, NuChoice};
use consensus_attack_core::Scenario;
use serde::{Deserialize, Serialize};

/// Largest grid accepted from a file. The noise attack's co-state map grows
/// with the grid, and nothing at desk scale needs more.
pub const MAX_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub n: usize,
    /// `[i, j, weight]` with 1-based nodes.
    pub edges: Vec<(usize, usize, f64)>,
}

impl TopologySpec {
    pub fn from_topology(t: &NetworkTopology) -> Self {
        TopologySpec {
            n: t.nodes(),
            edges: t.edges().iter().map(|e| (e.i + 1, e.j + 1, e.weight)).collect(),
        }
    }

    pub fn build(&self) -> Result<NetworkTopology, String> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(i, j, w) in &self.edges {
            if i == 0 || j == 0 {
                return Err(format!("edge [{i}, {j}]: nodes are numbered from 1"));
            }
            edges.push((i - 1, j - 1, w));
        }
        NetworkTopology::new(self.n, edges).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySource {
    Inline(TopologySpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Constant(f64),
    /// `[t, k]` pairs with increasing `t`.
    Table(Vec<(f64, f64)>),
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Constant(1.0)
    }
}

impl KernelSpec {
    pub fn to_kernel(&self) -> Kernel {
        match self {
            KernelSpec::Constant(v) => Kernel::Constant(*v),
            KernelSpec::Table(rows) => Kernel::Table(rows.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub ell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub p_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

impl NoiseSpec {
    pub fn params(&self) -> NoiseParams {
        let nu = match (self.nu, self.safety) {
            (Some(nu), _) => NuChoice::Nu(nu),
            (None, Some(f)) => NuChoice::Safety(f),
            (None, None) => NoiseParams::new(self.p_max).nu,
        };
        NoiseParams {
            p_max: self.p_max,
            nu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackSpec {
    #[default]
    None,
    Link(LinkSpec),
    Noise(NoiseSpec),
}

impl AttackSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::Link(_) => "link",
            AttackSpec::Noise(_) => "noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub topology: TopologySource,
    #[serde(default)]
    pub kernel: KernelSpec,
}

/// A parse failure or an invalid field, located in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A validated scenario together with the model objects built from it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
}

impl LoadedScenario {
    pub fn attack(&self) -> AttackSpec {
        self.config.attack
    }

    /// Replaces the grid, keeping the horizon.
    pub fn with_steps(&self, steps: usize) -> Result<Self, ConfigError> {
        let mut config = self.config.clone();
        config.steps = steps;
        let grid = TimeGrid::new(config.horizon, steps).map_err(|e| ConfigError {
            source: "--steps".into(),
            line: None,
            field: Some("steps".into()),
            message: e.to_string(),
        })?;
        let scenario = self.scenario.with_grid(grid).map_err(|e| ConfigError {
            source: "--steps".into(),
            line: None,
            field: Some("steps".into()),
            message: e.to_string(),
        })?;
        Ok(LoadedScenario { config, scenario })
    }
}

// Byte spans of the top-level fields, for line numbers in validation errors.
#[derive(Deserialize, Default)]
struct Spans {
    name: Option<toml::Spanned<toml::Value>>,
    x0: Option<toml::Spanned<toml::Value>>,
    #[serde(rename = "T")]
    horizon: Option<toml::Spanned<toml::Value>>,
    steps: Option<toml::Spanned<toml::Value>>,
    attack: Option<toml::Spanned<toml::Value>>,
    topology: Option<toml::Spanned<toml::Value>>,
    kernel: Option<toml::Spanned<toml::Value>>,
}

impl Spans {
    fn offset(&self, field: &str) -> Option<usize> {
        let s = match field {
            "name" => &self.name,
            "x0" => &self.x0,
            "T" => &self.horizon,
            "steps" => &self.steps,
            "attack" => &self.attack,
            "topology" => &self.topology,
            "kernel" => &self.kernel,
            _ => &None,
        };
        s.as_ref().map(|s| s.span().start)
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError {
        source: path.display().to_string(),
        line: None,
        field: None,
        message: format!("cannot read scenario file: {e}"),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, &path.display().to_string(), base)
}

/// Parses and validates scenario text; `base` resolves topology file paths.
pub fn parse_scenario(text: &str, source: &str, base: &Path) -> Result<LoadedScenario, ConfigError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError {
        source: source.to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
        field: None,
        message: e.message().to_string(),
    })?;
    let spans: Spans = toml::from_str(text).unwrap_or_default();
    let invalid = |field: &str, message: String| ConfigError {
        source: source.to_string(),
        line: spans.offset(field).map(|o| line_of(text, o)),
        field: Some(field.to_string()),
        message,
    };

    let spec = match &config.topology {
        TopologySource::Inline(spec) => spec.clone(),
        TopologySource::File(rel) => {
            let path = base.join(rel);
            let body = fs::read_to_string(&path).map_err(|e| {
                invalid("topology", format!("cannot read {}: {e}", path.display()))
            })?;
            toml::from_str(&body).map_err(|e| ConfigError {
                source: path.display().to_string(),
                line: e.span().map(|s| line_of(&body, s.start)),
                field: None,
                message: e.message().to_string(),
            })?
        }
    };
    let topology = spec.build().map_err(|m| invalid("topology", m))?;

    if config.x0.len() != topology.nodes() {
        return Err(invalid(
            "x0",
            format!(
                "has {} entries but the topology has {} nodes",
                config.x0.len(),
                topology.nodes()
            ),
        ));
    }
    if let Some(v) = config.x0.iter().find(|v| !v.is_finite()) {
        return Err(invalid("x0", format!("entry {v} is not finite")));
    }
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(invalid("T", format!("must be positive, got {}", config.horizon)));
    }
    if config.steps == 0 || config.steps > MAX_STEPS {
        return Err(invalid(
            "steps",
            format!("must lie in 1..={MAX_STEPS}, got {}", config.steps),
        ));
    }
    let grid = TimeGrid::new(config.horizon, config.steps).map_err(|e| invalid("steps", e.to_string()))?;
    let scenario = Scenario::new(topology, config.x0.clone(), grid, config.kernel.to_kernel())
        .map_err(|e| invalid("kernel", e.to_string()))?;

    match config.attack {
        AttackSpec::None => {}
        AttackSpec::Link(LinkSpec { ell }) => {
            let m = scenario.topology.edge_count();
            if ell > m {
                return Err(invalid(
                    "attack",
                    format!("link budget ell = {ell} exceeds the {m} edges of the topology"),
                ));
            }
        }
        AttackSpec::Noise(spec) => {
            if spec.safety.is_some() && spec.nu.is_some() {
                return Err(invalid("attack", "give either safety or nu, not both".into()));
            }
            if !(spec.p_max > 0.0 && spec.p_max.is_finite()) {
                return Err(invalid(
                    "attack",
                    format!("p_max must be positive, got {}", spec.p_max),
                ));
            }
            setup_for(&scenario, &spec.params()).map_err(|e| invalid("attack", e.to_string()))?;
        }
    }
    Ok(LoadedScenario { config, scenario })
}

/// Serializes a configuration back to TOML.
pub fn write_scenario(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario configs always serialize")
}
