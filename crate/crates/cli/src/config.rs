//! TOML experiment configuration. Every section is optional; missing keys
//! take the defaults documented in the README.

use holonomic::analysis::FitMode;
use holonomic::geometry::{TrigPolynomial, TrigTerm, VectorField};
use holonomic::lagrangians::LagrangianSpec;
use holonomic::optimize::VelocityPreset;
use holonomic::variations::BatteryConfig;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    /// Fallback tolerance for sections that do not set their own.
    pub tol: Option<f64>,
    pub lagrangian: Option<LagrangianSpec>,
    pub measure: Option<MeasureSource>,
    pub minimize: MinimizeConfig,
    pub criticality: CriticalityConfig,
    pub variation: VariationConfig,
    pub stencil: StencilConfig,
    pub energy: EnergyConfig,
    pub weak_kam: WeakKamConfig,
    pub transport: TransportConfig,
    pub corner: CornerConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSource {
    /// A measure JSON file, relative paths resolved against the config file.
    File {
        path: PathBuf,
        /// Re-validation tolerance for files that declare a cutoff.
        #[serde(default = "default_load_tol")]
        tol: f64,
    },
    Corner {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Line {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        height: f64,
        #[serde(default = "one")]
        speed: f64,
    },
    Arc {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Uniform weights on the `samples^d` grid, every atom with the same velocity.
    Grid { samples: usize, velocity: Vec<f64> },
}

fn default_load_tol() -> f64 {
    1e-8
}

fn default_samples() -> usize {
    64
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Velocities {
    Preset(VelocityPreset),
    /// One `n x d` fiber tuple per entry.
    Explicit(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeConfig {
    pub d: usize,
    pub samples: usize,
    pub velocities: Velocities,
    pub cutoff: u32,
    pub homology: Option<Vec<f64>>,
    /// Also write the LP as plain text.
    pub tableau: bool,
    pub tol: Option<f64>,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            d: 2,
            samples: 8,
            velocities: Velocities::Preset(VelocityPreset::Lattice16),
            cutoff: 2,
            homology: None,
            tableau: false,
            tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalityConfig {
    pub battery: BatteryConfig,
    /// Tolerance of the tangency pre-checks.
    pub tangency_tol: f64,
    /// Add the one-sided corner-rounding generator to the scan.
    pub corner_generator: bool,
    /// Violation threshold `tau`.
    pub tol: Option<f64>,
}

impl Default for CriticalityConfig {
    fn default() -> Self {
        Self {
            battery: BatteryConfig::default(),
            tangency_tol: 1e-6,
            corner_generator: false,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationKind {
    #[default]
    Battery,
    Horizontal,
    Vertical,
    Transpositional,
}

/// Trig polynomial for one component of a vector field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentTerms {
    pub axis: usize,
    pub terms: Vec<TrigTerm>,
}

/// Trig polynomial for one fiber component of a vertical shift.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftTerms {
    pub slot: usize,
    pub axis: usize,
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationConfig {
    pub kind: VariationKind,
    pub field: Vec<ComponentTerms>,
    pub shift: Vec<ShiftTerms>,
    /// Project vertical shifts onto the holonomy-tangent subspace.
    pub project: bool,
    pub cutoff: u32,
    pub homological: bool,
    pub sigma: Vec<TrigTerm>,
    pub slot: usize,
    pub steps: Vec<f64>,
    /// Size of the random test-function battery.
    pub tests: usize,
    pub battery: BatteryConfig,
    /// Tolerance of the (Prob)/(Hol) checks on each generator.
    pub tol: Option<f64>,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            kind: VariationKind::Battery,
            field: Vec::new(),
            shift: Vec::new(),
            project: true,
            cutoff: 1,
            homological: false,
            sigma: Vec::new(),
            slot: 0,
            steps: vec![0.02, 0.01, 0.005, 0.0025],
            tests: 10,
            battery: BatteryConfig::default(),
            tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StencilConfig {
    pub index: Vec<u32>,
    pub nodes: Vec<Vec<f64>>,
    pub h: f64,
}

impl Default for StencilConfig {
    fn default() -> Self {
        Self {
            index: Vec::new(),
            nodes: Vec::new(),
            h: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Single-linkage radius of the components.
    pub radius: f64,
    /// Bound on every component variance.
    pub tol: Option<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { radius: 0.05, tol: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakKamConfig {
    pub cutoff: u32,
    pub mode: FitMode,
    pub slot: usize,
    /// Bound on the Hamilton-Jacobi residual variance.
    pub tol: Option<f64>,
}

impl Default for WeakKamConfig {
    fn default() -> Self {
        Self {
            cutoff: 2,
            mode: FitMode::Closed,
            slot: 0,
            tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    /// Horizontal field whose variation is transported; ignored when
    /// `distribution` is set.
    pub field: Vec<ComponentTerms>,
    /// Distribution JSON file.
    pub distribution: Option<PathBuf>,
    /// Radius of the local coordinate test functions around each atom.
    pub radius: f64,
    /// Allowed constraint residual.
    pub tol: Option<f64>,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            field: Vec::new(),
            distribution: None,
            radius: 0.04,
            tol: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CornerConfig {
    pub samples: usize,
    /// Cutoff of the (Hol) check.
    pub cutoff: u32,
    /// Criticality threshold.
    pub tau: f64,
    /// Allowed deviation of the pairing from -2.
    pub tol: Option<f64>,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            cutoff: 3,
            tau: 1e-5,
            tol: None,
        }
    }
}

pub fn trig(d: usize, terms: &[TrigTerm]) -> holonomic::Result<TrigPolynomial> {
    TrigPolynomial::from_terms(d, terms)
}

/// Assemble a vector field from per-axis terms; unlisted axes are zero.
pub fn vector_field(d: usize, parts: &[ComponentTerms]) -> Result<VectorField, String> {
    let mut components = vec![TrigPolynomial::zero(d); d];
    for p in parts {
        if p.axis >= d {
            return Err(format!("field axis {} on a {d}-torus", p.axis));
        }
        components[p.axis].add_scaled(&trig(d, &p.terms).map_err(|e| e.to_string())?, 1.0);
    }
    VectorField::new(components).map_err(|e| e.to_string())
}
