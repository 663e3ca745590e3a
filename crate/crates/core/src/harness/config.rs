//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::Method;
use crate::error::{LabError, Result};
use crate::hamiltonians::{MatrixSpec, ModelSpec};
use crate::lattice::{Boundary, ChainGeometry};
use crate::linalg::{self, CMat, HermitianEigen, C64};
use crate::weyl::{self, pauli};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LightCone,
    ObstructionSweep,
    TwistCovariance,
    Spectrum,
    ReturnToEquilibrium,
    ProjectorDynamics,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::LightCone => "light_cone",
            ExperimentKind::ObstructionSweep => "obstruction_sweep",
            ExperimentKind::TwistCovariance => "twist_covariance",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::ReturnToEquilibrium => "return_to_equilibrium",
            ExperimentKind::ProjectorDynamics => "projector_dynamics",
        }
    }
}

/// `double`: floating-point eigensolvers everywhere, engines chosen by `method`.
/// `exact`: Weyl-pair eigenspaces from integer label arithmetic and dense
/// eigendecomposition for all propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Exact,
}

impl std::str::FromStr for Precision {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Precision::Double),
            "exact" => Ok(Precision::Exact),
            other => Err(LabError::Config(format!("unknown precision mode `{other}` (double | exact)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub sites: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_d() -> usize {
    2
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ChainGeometry> {
        ChainGeometry::new(self.sites, self.d, self.boundary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Separations (light cone) or sites (projector dynamics).
    #[serde(default)]
    pub x: Vec<i64>,
    #[serde(default)]
    pub t: Vec<f64>,
    /// Twist strengths.
    #[serde(default)]
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `ρ = 1 + s (sin θ X̃ + cos θ Z̃)` at one site.
    Density,
    /// `W = exp(i s (sin θ X̃ + cos θ Z̃))` at one site.
    Unitary,
}

/// Local perturbation of the tracial state. `X̃`, `Z̃` are the Hermitian parts
/// of the shift and clock (the Pauli matrices for `d = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "default_perturbation_kind")]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub site: usize,
    #[serde(default = "default_strength")]
    pub strength: f64,
    #[serde(default = "default_angle")]
    pub angle: f64,
}

fn default_perturbation_kind() -> PerturbationKind {
    PerturbationKind::Density
}

fn default_strength() -> f64 {
    0.5
}

fn default_angle() -> f64 {
    std::f64::consts::FRAC_PI_4
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            kind: default_perturbation_kind(),
            site: 0,
            strength: default_strength(),
            angle: default_angle(),
        }
    }
}

impl PerturbationConfig {
    pub fn local_generator(&self, d: usize) -> Result<CMat> {
        let x = site_operator("x", d)?;
        let z = site_operator("z", d)?;
        Ok(x * C64::from(self.angle.sin()) + z * C64::from(self.angle.cos()))
    }

    pub fn local_matrix(&self, d: usize) -> Result<CMat> {
        let gen = self.local_generator(d)?;
        Ok(match self.kind {
            PerturbationKind::Density => linalg::identity(d) + gen * C64::from(self.strength),
            PerturbationKind::Unitary => HermitianEigen::new(&gen).unitary(self.strength),
        })
    }
}

/// Single-site operators by name: `x`, `y`, `z` (Hermitian parts of shift,
/// `i`·(shift − shift†)/2 and clock for `d > 2`), `shift`, `clock`, `identity`.
pub fn site_operator(name: &str, d: usize) -> Result<CMat> {
    let herm = |m: CMat| (&m + m.adjoint()) * C64::from(0.5);
    let anti = |m: CMat| (&m - m.adjoint()) * C64::new(0.0, 0.5);
    match (name, d) {
        ("x", 2) => Ok(pauli::x()),
        ("y", 2) => Ok(pauli::y()),
        ("z", 2) => Ok(pauli::z()),
        ("x", _) => Ok(herm(weyl::shift_op(d)?)),
        ("y", _) => Ok(anti(weyl::shift_op(d)?)),
        ("z", _) => Ok(herm(weyl::clock(d)?)),
        ("shift", _) => weyl::shift_op(d),
        ("clock", _) => weyl::clock(d),
        ("identity", _) => Ok(linalg::identity(d)),
        (other, _) => Err(LabError::Config(format!(
            "unknown site operator `{other}` (x | y | z | shift | clock | identity)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Output file stem; defaults to the experiment kind.
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    /// Model list for the sweeping kinds; empty means the built-in zoo.
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_observable")]
    pub observable: String,
    #[serde(default = "default_observable")]
    pub probe: String,
    #[serde(default)]
    pub site: usize,
    /// Random Hamiltonians per family in obstruction sweeps.
    #[serde(default)]
    pub random_count: usize,
    /// Overrides the model's default twist generator `B0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_generator: Option<MatrixSpec>,
    #[serde(default = "default_averaging_time")]
    pub averaging_time: f64,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_method() -> Method {
    Method::Auto
}

fn default_model() -> ModelSpec {
    ModelSpec::Heisenberg {}
}

fn default_observable() -> String {
    "x".into()
}

fn default_averaging_time() -> f64 {
    1e10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.fill_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Replaces implicit defaults so the serialized form is fully determined.
    pub fn fill_defaults(&mut self) {
        if self.name.is_empty() {
            self.name = self.kind.as_str().to_string();
        }
        let l = self.geometry.sites as i64;
        let g = &mut self.grid;
        match self.kind {
            ExperimentKind::LightCone => {
                if g.x.is_empty() {
                    g.x = (0..=l / 2).collect();
                }
                if g.t.is_empty() {
                    g.t = vec![0.0, 0.25, 0.5, 1.0];
                }
            }
            ExperimentKind::TwistCovariance => {
                if g.g.is_empty() {
                    g.g = vec![0.1, 0.3, 1.0];
                }
            }
            ExperimentKind::ReturnToEquilibrium => {
                if g.t.is_empty() {
                    g.t = (0..=100).map(|k| k as f64 * 0.1).collect();
                }
            }
            ExperimentKind::ProjectorDynamics => {
                if g.x.is_empty() {
                    g.x = (0..l).collect();
                }
                if g.t.is_empty() {
                    g.t = vec![0.0, 0.5, 1.0, 2.0];
                }
            }
            ExperimentKind::ObstructionSweep | ExperimentKind::Spectrum => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry.build().map_err(|e| LabError::Config(e.to_string()))?;
        let d = geom.site_dim();
        site_operator(&self.observable, d)?;
        site_operator(&self.probe, d)?;
        if self.site >= geom.sites() {
            return Err(LabError::Config(format!(
                "site {} outside a chain of {} sites",
                self.site,
                geom.sites()
            )));
        }
        if self.perturbation.site >= geom.sites() {
            return Err(LabError::Config("perturbation site outside the chain".into()));
        }
        if self.name.contains(['/', '\\']) {
            return Err(LabError::Config("name must be a plain file stem".into()));
        }
        if self.averaging_time.is_nan() || self.averaging_time <= 0.0 {
            return Err(LabError::Config("averaging_time must be positive".into()));
        }
        if self.grid.t.iter().chain(&self.grid.g).any(|v| !v.is_finite()) {
            return Err(LabError::Config("grid values must be finite".into()));
        }
        if let Some(m) = &self.twist_generator {
            m.to_matrix().map_err(|e| LabError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ChainGeometry> {
        self.geometry.build()
    }

    pub fn effective_method(&self) -> Method {
        match self.precision {
            Precision::Exact => Method::Exact,
            Precision::Double => self.method,
        }
    }
}
