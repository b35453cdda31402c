//! Run configuration, read from TOML.

use std::fmt;
use std::path::Path;

use gapcert::geometry::DomainSpec;
use gapcert::operator::Potential;
use gapcert::Point;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown check id `{0}` (see `gapcert list-checks`)")]
    UnknownCheck(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// The checks a run can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CheckId {
    Eigen,
    Gap,
    Modulus,
    Logconcavity,
    HeatSlack,
    Decay,
    Neumann,
    DirichletBounds,
    Isodiametric,
    ModelResiduals,
    RatioDiagnostic,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::Eigen,
        CheckId::Gap,
        CheckId::Modulus,
        CheckId::Logconcavity,
        CheckId::HeatSlack,
        CheckId::Decay,
        CheckId::Neumann,
        CheckId::DirichletBounds,
        CheckId::Isodiametric,
        CheckId::ModelResiduals,
        CheckId::RatioDiagnostic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Eigen => "eigen",
            CheckId::Gap => "gap",
            CheckId::Modulus => "modulus",
            CheckId::Logconcavity => "logconcavity",
            CheckId::HeatSlack => "heat-slack",
            CheckId::Decay => "decay",
            CheckId::Neumann => "neumann",
            CheckId::DirichletBounds => "dirichlet-bounds",
            CheckId::Isodiametric => "isodiametric",
            CheckId::ModelResiduals => "model-residuals",
            CheckId::RatioDiagnostic => "ratio-diagnostic",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CheckId::Eigen => {
                "lowest Dirichlet eigenpairs on every grid level, with residual certificates"
            }
            CheckId::Gap => "fundamental gap against 3π²/D², Richardson-corrected",
            CheckId::Modulus => {
                "pairwise expansion of -∇log φ₀ against the tangent barrier, with a δ sweep"
            }
            CheckId::Logconcavity => {
                "smallest Hessian eigenvalue of -log φ₀ on the admissible nodes"
            }
            CheckId::HeatSlack => {
                "pairwise log-concavity of the heat kernel against the interval model"
            }
            CheckId::Decay => "decay of the kernel maximum against the interval model",
            CheckId::Neumann => {
                "second Neumann eigenvalue of the drift Laplacian against its lower bound"
            }
            CheckId::DirichletBounds => "λ₀ and λ₁ against the diameter bounds",
            CheckId::Isodiametric => "λ₀ and λ₁ against the volume-form bounds",
            CheckId::ModelResiduals => "self-consistency of the interval model kernel and barrier",
            CheckId::RatioDiagnostic => "modulus of continuity of φ₁/φ₀ (diagnostic)",
        }
    }

    /// Whether the check reads the Dirichlet eigenpairs of the finest grid.
    pub(crate) fn needs_fine_spectrum(self) -> bool {
        matches!(
            self,
            CheckId::Modulus
                | CheckId::Logconcavity
                | CheckId::HeatSlack
                | CheckId::Decay
                | CheckId::RatioDiagnostic
        )
    }

    /// Whether the check reads the Dirichlet eigenpairs of every level.
    pub(crate) fn needs_all_levels(self) -> bool {
        matches!(
            self,
            CheckId::Eigen | CheckId::Gap | CheckId::DirichletBounds | CheckId::Isodiametric
        )
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for CheckId {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, ConfigError> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or(ConfigError::UnknownCheck(s))
    }
}

impl From<CheckId> for String {
    fn from(c: CheckId) -> String {
        c.as_str().to_string()
    }
}

/// Drift of the Neumann check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeumannDrift {
    /// No drift; held to `2ε' + π²/D²`.
    #[default]
    Zero,
    /// The interval model drift `(π/D) tan(πs/D)`; held to `3π²/D²`.
    Model,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeumannConfig {
    pub drift: NeumannDrift,
    /// Expansion modulus of the drift (`0` for convex drifts).
    pub epsilon: f64,
}

/// Overrides of the default tolerances. Absent values keep the defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pairwise slack tolerance (default `10h(π/D)²`).
    pub slack: Option<f64>,
    /// Per-step decay tolerance rate (default `10h(π/D)²` per unit time).
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub domain: DomainSpec,
    /// Grid spacings, coarse to fine. Two or more levels enable Richardson
    /// correction of the eigenvalue bounds.
    pub h: Vec<f64>,
    #[serde(default)]
    pub potential: Potential,
    pub checks: Vec<CheckId>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_max_pairs")]
    pub max_pairs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Heat snapshot times; empty means `{0.02, 0.05, 0.1, 0.2}·D²`.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Heat source; defaults to the node nearest the centroid. An off-centre
    /// source is always added.
    #[serde(default)]
    pub source: Option<Point>,
    #[serde(default)]
    pub neumann: NeumannConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_delta() -> f64 {
    1e-2
}

fn default_max_pairs() -> usize {
    100_000
}

impl RunConfig {
    /// A config with every optional field at its default.
    pub fn new(name: &str, domain: DomainSpec, h: &[f64], checks: &[CheckId]) -> RunConfig {
        RunConfig {
            name: name.to_string(),
            domain,
            h: h.to_vec(),
            potential: Potential::default(),
            checks: checks.to_vec(),
            delta: default_delta(),
            max_pairs: default_max_pairs(),
            seed: 0,
            times: Vec::new(),
            source: None,
            neumann: NeumannConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            // Surface unknown check ids with their own error.
            let msg = e.message().to_string();
            match msg
                .strip_prefix("unknown check id `")
                .and_then(|r| r.split('`').next())
            {
                Some(id) => ConfigError::UnknownCheck(id.to_string()),
                None => ConfigError::Parse(e.to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the config echoed inside a JSON report.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            let cfg = value.get("config").cloned().unwrap_or(value);
            let cfg: RunConfig =
                serde_json::from_value(cfg).map_err(|e| ConfigError::Parse(e.to_string()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.domain
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.h.is_empty() {
            return invalid("at least one grid spacing `h` is required".into());
        }
        if self.h.iter().any(|h| !(h.is_finite() && *h > 0.0))
            || self.h.windows(2).any(|w| w[1] >= w[0])
        {
            return invalid("grid spacings must be positive and decreasing".into());
        }
        if self.checks.is_empty() {
            return invalid("no checks selected".into());
        }
        let mut seen = self.checks.clone();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("check `{}` listed twice", w[0]));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if self.max_pairs == 0 {
            return invalid("max_pairs must be positive".into());
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0))
            || self.times.windows(2).any(|w| w[1] <= w[0])
        {
            return invalid("times must be positive and increasing".into());
        }
        for (name, v) in [
            ("slack", self.tolerances.slack),
            ("decay", self.tolerances.decay),
        ] {
            if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
                return invalid(format!("tolerance override `{name}` must be positive"));
            }
        }
        if !self.neumann.epsilon.is_finite() {
            return invalid("neumann.epsilon must be finite".into());
        }
        if self.checks.contains(&CheckId::Neumann)
            && self.neumann.drift == NeumannDrift::Model
            && self.domain.dimension() != 1
        {
            return invalid("the model Neumann drift is defined on intervals only".into());
        }
        if let Some(z) = self.source {
            if !self.domain.contains_strict(z, 0.0) {
                return invalid(format!("heat source {z:?} lies outside the domain"));
            }
        }
        if self
            .checks
            .iter()
            .any(|c| matches!(c, CheckId::DirichletBounds | CheckId::Isodiametric))
            && !self.potential.is_convex(self.domain.dimension())
        {
            return invalid("the eigenvalue bounds need a convex potential".into());
        }
        Ok(())
    }
}
