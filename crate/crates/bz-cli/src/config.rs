//! Configuration file schema. Every key has a default; the fully resolved
//! configuration is echoed into the run manifest so absent keys are never
//! ambiguous.

use bz_core::grid::GridSpec;
use bz_core::model::ModelParams;
use bz_core::semigroup::{PropagatorConfig, PropagatorMode};
use bz_core::stepper::Scheme;
use serde::{Deserialize, Serialize};

fn default_seed() -> u64 {
    0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub propagator: PropagatorSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub trap_time: TrapTimeSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            output_dir: None,
            params: Default::default(),
            grid: Default::default(),
            propagator: Default::default(),
            solver: Default::default(),
            analyze: Default::default(),
            simulate: Default::default(),
            verify: Default::default(),
            trap_time: Default::default(),
            sweep: Default::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    /// Named preset; currently only "classic" (eps = 0.032, q = 2e-4,
    /// d = 0.6). Explicit values below override the preset fields.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    /// Excitability; always user-supplied (the presets do not fix it).
    #[serde(default = "ParamsSection::default_h")]
    pub h: f64,
}

impl ParamsSection {
    fn default_h() -> f64 {
        1.0
    }

    pub fn resolve(&self) -> Result<ModelParams, String> {
        let (mut eps, mut q, mut d) = match self.preset.as_deref() {
            None => (None, None, None),
            Some("classic") => (Some(0.032), Some(2.0e-4), Some(0.6)),
            Some(other) => return Err(format!("unknown preset '{other}'")),
        };
        if let Some(e) = self.epsilon {
            eps = Some(e);
        }
        if let Some(qq) = self.q {
            q = Some(qq);
        }
        if let Some(dd) = self.d {
            d = Some(dd);
        }
        let missing = |name: &str| {
            format!("params.{name} missing: set it explicitly or pick a preset")
        };
        let p = ModelParams::new(
            eps.ok_or_else(|| missing("epsilon"))?,
            self.h,
            q.ok_or_else(|| missing("q"))?,
            d.ok_or_else(|| missing("d"))?,
        )
        .map_err(|e| e.to_string())?;
        Ok(p)
    }
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            preset: Some("classic".to_string()),
            epsilon: None,
            q: None,
            d: None,
            h: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 1, extent: 100.0, points: 128 }
    }
}

impl GridSection {
    pub fn resolve(&self) -> Result<GridSpec, String> {
        GridSpec::new(self.dim, self.extent, self.points).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorSection {
    pub mode: PropagatorMode,
    pub substeps_per_unit: f64,
}

impl Default for PropagatorSection {
    fn default() -> Self {
        Self { mode: PropagatorMode::KernelConvolution, substeps_per_unit: 64.0 }
    }
}

impl PropagatorSection {
    pub fn resolve(&self) -> PropagatorConfig {
        let base = match self.mode {
            PropagatorMode::KernelConvolution => PropagatorConfig::kernel(),
            PropagatorMode::SpectralMultiplier => PropagatorConfig::spectral(),
        };
        PropagatorConfig { substeps_per_unit: self.substeps_per_unit, ..base }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Imex,
    Mild,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    #[serde(default)]
    pub imex: ImexSection,
    #[serde(default)]
    pub mild: MildSection,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { kind: SolverKind::Imex, imex: Default::default(), mild: Default::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImexSection {
    pub scheme: Scheme,
    /// 0 selects the largest stable step automatically.
    pub dt: f64,
    /// 0 selects a stride targeting about 256 snapshots.
    pub snapshot_stride: usize,
}

impl Default for ImexSection {
    fn default() -> Self {
        Self { scheme: Scheme::ImexStrang, dt: 0.0, snapshot_stride: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MildSection {
    pub samples: usize,
    pub quad_substeps: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MildSection {
    fn default() -> Self {
        Self { samples: 64, quad_substeps: 4, tol: 1e-8, max_iter: 20 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    /// Data bound used for q1 and the solver-horizon constants.
    pub m: f64,
    /// Floor for the trap chain; 0 selects q/2.
    pub c_star: f64,
    pub margins: MarginsSection,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self { m: 1.0, c_star: 0.0, margins: Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginsSection {
    pub q2: f64,
    pub q3: f64,
    pub u_star: f64,
}

impl Default for MarginsSection {
    fn default() -> Self {
        Self { q2: 0.5, q3: 0.5, u_star: 0.5 }
    }
}

impl MarginsSection {
    pub fn resolve(&self) -> bz_core::comparison::Margins {
        bz_core::comparison::Margins { q2: self.q2, q3: self.q3, u_star: self.u_star }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Uniform levels (u, v).
    Uniform { u: f64, v: f64 },
    /// The nontrivial steady state.
    Steady,
    /// All zero.
    Trivial,
    /// Gaussian bump in u over a uniform background; v uniform.
    Bump { amplitude: f64, width: f64, baseline_u: f64, v: f64 },
    /// Smooth random pair inside [lo, hi]^2.
    RandomBox { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub t_final: f64,
    pub initial: InitialCondition,
    /// PGM frames to write for 2-D runs (0 = none).
    pub frames: usize,
    /// Also write the final u and v fields as CSV.
    pub write_final_fields: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            initial: InitialCondition::Uniform { u: 1.0e-4, v: 1.0e-4 },
            frames: 0,
            write_final_fields: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random fields per estimate in the propagator suite.
    pub suite_trials: usize,
    /// 1-D points for the suite grid.
    pub suite_points: usize,
    /// Random initial pairs per invariance region.
    pub invariance_samples: usize,
    pub invariance_t: f64,
    /// Upper edge of the [0, m]^2 box experiment.
    pub box_m: f64,
    pub probe_amplitude: f64,
    pub probe_t: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suite_trials: 100,
            suite_points: 256,
            invariance_samples: 10,
            invariance_t: 10.0,
            box_m: 2.0,
            probe_amplitude: 1.0e-6,
            probe_t: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapTimeSection {
    pub c_star_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub margins: MarginsSection,
    /// Also simulate from uniform (c*, c*) and check the entry time.
    pub entry_check: bool,
    /// Slack added to T# for the entry verdict; 0 selects one snapshot
    /// interval.
    pub entry_tol: f64,
}

impl Default for TrapTimeSection {
    fn default() -> Self {
        Self {
            c_star_values: vec![1.0e-4],
            m_values: vec![1.0],
            margins: Default::default(),
            entry_check: false,
            entry_tol: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub h_values: Vec<f64>,
    pub t_final: f64,
    /// Bump height for the localized perturbation (must stay below 1).
    pub amplitude: f64,
    pub width: f64,
    /// PGM frames per run (0 = none).
    pub frames: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            h_values: vec![0.5, 2.0],
            t_final: 0.02,
            amplitude: 0.5,
            width: 2.0,
            frames: 0,
        }
    }
}
