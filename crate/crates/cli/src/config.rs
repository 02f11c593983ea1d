//! Run configuration: TOML on disk, canonical JSON for hashing.

use std::path::Path;

use kerrcat::noise::{NoiseKind, NoiseModel};
use kerrcat::pulse::DragMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

const PRESETS: [(&str, &str); 5] = [
    ("fig2bc", include_str!("../presets/fig2bc.toml")),
    ("fig2ef", include_str!("../presets/fig2ef.toml")),
    ("fig3cd", include_str!("../presets/fig3cd.toml")),
    ("figS1", include_str!("../presets/figS1.toml")),
    ("figS2", include_str!("../presets/figS2.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    X,
    Y,
    ZRobust,
    ZStraight,
    Kerr,
    Idle,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::X => "x",
            SchemeKind::Y => "y",
            SchemeKind::ZRobust => "z_robust",
            SchemeKind::ZStraight => "z_straight",
            SchemeKind::Kerr => "kerr",
            SchemeKind::Idle => "idle",
        }
    }
}

/// One family of gate-sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub label: String,
    pub scheme: SchemeKind,
    pub alpha2: Vec<f64>,
    pub durations: Vec<f64>,
    #[serde(default = "default_drag")]
    pub drag: DragMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_bound: Option<f64>,
    /// Also write the optimized control samples of every point.
    #[serde(default)]
    pub write_schedules: bool,
}

fn default_drag() -> DragMode {
    DragMode::Exact
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub coarse_n: usize,
    pub refine_rounds: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { coarse_n: 21, refine_rounds: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub steps: usize,
    pub samples: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { steps: 1000, samples: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub alpha2_min: f64,
    pub alpha2_max: f64,
    pub alpha2_points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { delta_min: 0.0, delta_max: 1.0, delta_points: 50, alpha2_min: 0.0, alpha2_max: 3.0, alpha2_points: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustLineConfig {
    pub alpha2_min: f64,
    pub alpha2_max: f64,
    pub points: usize,
}

impl Default for RobustLineConfig {
    fn default() -> Self {
        Self { alpha2_min: 0.1, alpha2_max: 3.0, points: 30 }
    }
}

/// Noise analysis of one optimized Z schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub scheme: SchemeKind,
    pub alpha2: f64,
    pub duration: f64,
    pub realizations: usize,
    pub model: NoiseKind,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::ZRobust,
            alpha2: 2.0,
            duration: 40.0,
            realizations: 100,
            model: NoiseKind::OrnsteinUhlenbeck { sigma: 5e-3, tau_c: 400.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoQubitConfig {
    pub alpha2_a: f64,
    pub alpha2_b: f64,
    pub phase: f64,
    pub theta: f64,
    pub duration: f64,
    /// Per-mode Fock dimension of the full check; 0 skips it.
    pub mode_dim: usize,
    /// Coupling area of the full check (small, first order).
    pub check_area: f64,
    pub check_steps: usize,
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        Self {
            alpha2_a: 1.5,
            alpha2_b: 1.5,
            phase: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
            duration: 40.0,
            mode_dim: 0,
            check_area: 0.02,
            check_steps: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    /// Sampled points per sweep, taken in sweep order.
    pub max_points: usize,
    pub threshold: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { max_points: 2, threshold: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub robust_line: RobustLineConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub twoqubit: TwoQubitConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub sweep: Vec<SweepConfig>,
}

fn default_delta_max() -> f64 {
    5e-3
}
fn default_nodes() -> usize {
    11
}
fn default_fock_dim() -> usize {
    40
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// A file path, or the name of a shipped preset.
    pub fn load(source: &str) -> Result<Self, CliError> {
        if let Some((_, text)) = PRESETS.iter().find(|(n, _)| *n == source) {
            return Self::from_toml(text);
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| {
            let presets: Vec<_> = preset_names().collect();
            CliError::Config(format!("cannot read {source}: {e} (presets: {})", presets.join(", ")))
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) {
            return bad(format!("delta_max must be positive, got {}", self.delta_max));
        }
        if self.nodes < 3 || self.nodes.is_multiple_of(2) {
            return bad(format!("nodes must be odd and at least 3, got {}", self.nodes));
        }
        if self.fock_dim < 2 {
            return bad(format!("fock_dim must be at least 2, got {}", self.fock_dim));
        }
        if self.optimizer.coarse_n < 2 {
            return bad("optimizer.coarse_n must be at least 2".into());
        }
        if self.propagation.steps == 0 || self.propagation.samples < 2 {
            return bad("propagation.steps and propagation.samples must be positive".into());
        }
        for s in &self.sweep {
            if s.alpha2.is_empty() || s.durations.is_empty() {
                return bad(format!("sweep '{}' has an empty alpha2 or durations list", s.label));
            }
            if s.alpha2.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return bad(format!("sweep '{}' has a negative cat size", s.label));
            }
            if s.durations.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return bad(format!("sweep '{}' has a non-positive duration", s.label));
            }
            if s.label.contains(',') || s.label.contains('/') {
                return bad(format!("sweep label '{}' may not contain ',' or '/'", s.label));
            }
        }
        let sp = &self.spectrum;
        if sp.delta_points < 2 || sp.alpha2_points < 2 || sp.delta_max <= sp.delta_min || sp.alpha2_max <= sp.alpha2_min
        {
            return bad("spectrum grid needs at least 2 points on increasing ranges".into());
        }
        let rl = &self.robust_line;
        if rl.points < 2 || rl.alpha2_max <= rl.alpha2_min || rl.alpha2_min <= 0.0 {
            return bad("robust_line needs at least 2 points on a positive increasing range".into());
        }
        if !matches!(self.noise.scheme, SchemeKind::ZRobust | SchemeKind::ZStraight | SchemeKind::Kerr) {
            return bad("noise.scheme must be z_robust, z_straight or kerr".into());
        }
        if self.noise.realizations == 0 {
            return bad("noise.realizations must be positive".into());
        }
        self.noise_model().map(|_| ())?;
        if self.convergence.threshold.is_nan() || self.convergence.threshold <= 0.0 {
            return bad("convergence.threshold must be positive".into());
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        NoiseModel::new(self.noise.model.clone(), self.seed).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
