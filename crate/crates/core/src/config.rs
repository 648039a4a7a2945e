//! Run configuration: a TOML file (`key = value` lines grouped in sections)
//! deserialized with unknown keys rejected, plus named presets.
//!
//! ```toml
//! seed = 7
//!
//! [tolerances]
//! symmetry = 1e-11
//!
//! [model]
//! kind = "potential"
//! g = { c0 = 0.006, c1 = 0.01 }
//!
//! [simulate]
//! n = 16
//! steps = 500
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gfunc::PolynomialG;
use crate::les::SimParams;
use crate::models::{ClosureModel, CoefficientFn, ModelError};
use crate::symmetry::GroupKind;
use crate::tensor::{decompose, SkewTensor3, SymTensor3, Tensor3, TensorError};
use crate::zoo::{ReferenceModel, DEFAULT_CS, DEFAULT_EPS_GRID};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}")]
    Invalid(String),
}

/// Closure selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Zero,
    Viscous { nu: f64 },
    /// Coefficients of `[I1, I2, B1, B2, B3, B4]`.
    General { alpha: [CoefficientFn; 7] },
    /// Coefficients of `[v1, …, v5]`, divided by `|S|^p`.
    Scaled { alpha: [CoefficientFn; 7] },
    Potential { g: PolynomialG },
    Smagorinsky {
        #[serde(default = "default_cs")]
        cs: f64,
        delta: f64,
    },
    LundNovikov { c: [f64; 5], delta: f64 },
    Kosovic { c1: f64, c2: f64, c4: f64, delta: f64 },
    Rdh05 { g: PolynomialG, nu: f64 },
}

fn default_cs() -> f64 {
    DEFAULT_CS
}

impl Default for ModelConfig {
    fn default() -> Self {
        model_preset("scaled", DEFAULT_NU).expect("built-in preset")
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ClosureModel, ModelError> {
        Ok(match self.clone() {
            ModelConfig::Zero => ClosureModel::zero(),
            ModelConfig::Viscous { nu } => ClosureModel::viscous(nu),
            ModelConfig::General { alpha } => ClosureModel::general(alpha),
            ModelConfig::Scaled { alpha } => ClosureModel::scaled(alpha),
            ModelConfig::Potential { g } => {
                if !g.is_finite() {
                    return Err(ModelError::Invalid("g coefficients must be finite".into()));
                }
                ClosureModel::polynomial_potential(g)
            }
            ModelConfig::Smagorinsky { cs, delta } => ClosureModel::reference(ReferenceModel::smagorinsky(cs, delta)?),
            ModelConfig::LundNovikov { c, delta } => ClosureModel::reference(ReferenceModel::lund_novikov(c, delta)?),
            ModelConfig::Kosovic { c1, c2, c4, delta } => {
                ClosureModel::reference(ReferenceModel::kosovic(c1, c2, c4, delta)?)
            }
            ModelConfig::Rdh05 { g, nu } => ClosureModel::reference(ReferenceModel::rdh05(g, nu)?),
        })
    }
}

/// Viscosity used by presets when none is given.
pub const DEFAULT_NU: f64 = 0.02;

pub const MODEL_PRESETS: [&str; 10] = [
    "zero",
    "viscous",
    "scaled",
    "potential",
    "constant_g",
    "violating",
    "smagorinsky",
    "lund_novikov",
    "kosovic",
    "rdh05",
];

/// Named closures. `nu` sets the viscosity scale of the `g`-based presets.
///
/// - `scaled`: a fixed member of the scale-invariant family with all seven
///   coefficients nonzero.
/// - `potential`: `g = 0.3ν + 0.5ν·v1`, which passes the positivity
///   certificate.
/// - `constant_g`: `g ≡ ν/2`.
/// - `violating`: `g ≡ 2ν`, which makes the total dissipation negative.
pub fn model_preset(name: &str, nu: f64) -> Result<ModelConfig, ConfigError> {
    Ok(match name {
        "zero" => ModelConfig::Zero,
        "viscous" => ModelConfig::Viscous { nu },
        "scaled" => ModelConfig::Scaled {
            alpha: [
                CoefficientFn::Affine { constant: 0.4, linear: vec![0.3, -0.1, 0.05, 0.2, 0.01] },
                CoefficientFn::Affine { constant: -0.2, linear: vec![0.1, 0.2, 0.0, -0.3] },
                CoefficientFn::Constant(0.15),
                CoefficientFn::Affine { constant: 0.05, linear: vec![0.0, 0.1] },
                CoefficientFn::Constant(0.25),
                CoefficientFn::Affine { constant: -0.1, linear: vec![0.2] },
                CoefficientFn::Constant(0.07),
            ],
        },
        "potential" => ModelConfig::Potential { g: PolynomialG { c0: 0.3 * nu, c1: 0.5 * nu, ..Default::default() } },
        "constant_g" => ModelConfig::Potential { g: PolynomialG::constant(0.5 * nu) },
        "violating" => ModelConfig::Potential { g: PolynomialG::constant(2.0 * nu) },
        "smagorinsky" => ModelConfig::Smagorinsky { cs: DEFAULT_CS, delta: 0.1 },
        "lund_novikov" => ModelConfig::LundNovikov { c: [-0.0578, 0.04, 0.02, 0.03, 0.01], delta: 0.1 },
        "kosovic" => ModelConfig::Kosovic { c1: -0.0578, c2: 0.04, c4: 0.03, delta: 0.1 },
        "rdh05" => ModelConfig::Rdh05 { g: PolynomialG { c0: 0.3, c1: 0.5, ..Default::default() }, nu },
        _ => {
            return Err(ConfigError::UnknownPreset { name: name.into(), available: MODEL_PRESETS.join(", ") })
        }
    })
}

pub const STATE_PRESETS: [&str; 5] = ["plane_shear", "solid_rotation", "pure_strain", "axisymmetric", "zero"];

/// Named velocity gradients.
pub fn state_preset(name: &str) -> Result<Tensor3, ConfigError> {
    let g = match name {
        "plane_shear" => [[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]],
        "solid_rotation" => [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]],
        "pure_strain" => [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0; 3]],
        "axisymmetric" => [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
        "zero" => [[0.0; 3]; 3],
        _ => {
            return Err(ConfigError::UnknownPreset { name: name.into(), available: STATE_PRESETS.join(", ") })
        }
    };
    Ok(Tensor3::new(g)?)
}

/// Where the `invariants` command gets its states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSource {
    /// Seeded unit-norm `(S, Ω)` pairs; `rotation = false` sets `Ω = 0`.
    Random {
        count: usize,
        #[serde(default = "yes")]
        rotation: bool,
    },
    Preset { name: String },
    /// Row-major velocity gradients.
    Inline { gradients: Vec<[[f64; 3]; 3]> },
    /// CSV file with nine gradient entries per line, row-major; lines starting
    /// with `#` and a non-numeric header are ignored.
    File { path: PathBuf },
}

fn yes() -> bool {
    true
}

impl Default for StateSource {
    fn default() -> Self {
        StateSource::Random { count: 100, rotation: true }
    }
}

impl StateSource {
    pub fn states(&self, seed: u64) -> Result<Vec<(SymTensor3, SkewTensor3)>, ConfigError> {
        let from_grads = |grads: Vec<Tensor3>| -> Result<Vec<_>, ConfigError> {
            grads.iter().map(|g| decompose(g).map(|d| (d.s, d.omega)).map_err(ConfigError::from)).collect()
        };
        match self {
            StateSource::Random { count, rotation } => {
                let mut states = crate::sampling::unit_states(*count, seed);
                if !rotation {
                    for s in &mut states {
                        s.1 = SkewTensor3::ZERO;
                    }
                }
                Ok(states)
            }
            StateSource::Preset { name } => from_grads(vec![state_preset(name)?]),
            StateSource::Inline { gradients } => {
                from_grads(gradients.iter().map(|g| Tensor3::new(*g)).collect::<Result<_, _>>()?)
            }
            StateSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ConfigError::Read { path: path.clone(), source })?;
                from_grads(parse_gradient_rows(&text)?)
            }
        }
    }
}

/// Parses rows of nine comma-separated numbers.
pub fn parse_gradient_rows(text: &str) -> Result<Vec<Tensor3>, ConfigError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(values) = parsed else {
            if out.is_empty() && lineno == 0 {
                continue;
            }
            return Err(ConfigError::Invalid(format!("line {}: expected nine numbers", lineno + 1)));
        };
        out.push(parse_gradient(&values).map_err(|e| ConfigError::Invalid(format!("line {}: {e}", lineno + 1)))?);
    }
    Ok(out)
}

pub fn parse_gradient(values: &[f64]) -> Result<Tensor3, ConfigError> {
    if values.len() != 9 {
        return Err(ConfigError::Invalid(format!("a velocity gradient has 9 entries, got {}", values.len())));
    }
    Ok(Tensor3::new(std::array::from_fn(|i| std::array::from_fn(|j| values[3 * i + j])))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub symmetry: f64,
    pub gradcheck: f64,
    pub hessian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { symmetry: 1e-11, gradcheck: 1e-6, hessian: 1e-5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantsConfig {
    pub states: StateSource,
    /// Brute-force samples for the `v1` extremal scan; 0 skips it.
    pub v1_scan: usize,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetriesConfig {
    pub groups: Vec<GroupKind>,
    /// Random elements per group.
    pub elements: usize,
    pub probes: usize,
}

impl Default for SymmetriesConfig {
    fn default() -> Self {
        SymmetriesConfig { groups: GroupKind::ALL.to_vec(), elements: 5, probes: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub g: PolynomialG,
    pub nu: f64,
    pub v_star: f64,
    pub samples: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            g: PolynomialG::constant(0.5 * DEFAULT_NU),
            nu: DEFAULT_NU,
            v_star: 1.0 / 6.0_f64.sqrt(),
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub states: usize,
    /// Also check tangent symmetry of the configured model on this many states.
    pub hessian_states: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig { states: 1000, hessian_states: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreakageConfig {
    pub groups: Vec<GroupKind>,
    pub eps_grid: Vec<f64>,
    pub probes: usize,
}

impl Default for BreakageConfig {
    fn default() -> Self {
        BreakageConfig { groups: GroupKind::ALL.to_vec(), eps_grid: DEFAULT_EPS_GRID.to_vec(), probes: 100 }
    }
}

/// Complete configuration for every subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub model: ModelConfig,
    pub invariants: InvariantsConfig,
    pub symmetries: SymmetriesConfig,
    pub certify: CertifyConfig,
    pub gradcheck: GradcheckConfig,
    pub simulate: SimParams,
    pub breakage: BreakageConfig,
}


impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}
