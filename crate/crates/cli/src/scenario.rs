//! Scenario files: one TOML document per run, unknown keys rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fw_core::hamiltonians::{DiscretizationScheme, FieldConfiguration, ParticleParams, PeriodicGrid, SampledField, V3};
use fw_core::semiclassical::DEFAULT_VALIDITY_THRESHOLD;
use fw_core::transform::PathChoice;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Transform,
    Simulate,
    Ehrenfest,
    Probe,
    Check,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    DiracPauli,
    FeshbachVillars,
}

impl HamiltonianKind {
    pub fn spinor_rank(self) -> usize {
        match self {
            HamiltonianKind::DiracPauli => 4,
            HamiltonianKind::FeshbachVillars => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    /// Optional; when given it must match the subcommand.
    pub task: Option<Task>,
    pub hamiltonian: HamiltonianKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub particle: ParticleParams,
    pub field: FieldSpec,
    #[serde(default)]
    pub discretization: Option<DiscretizationSpec>,
    #[serde(default)]
    pub transform: TransformSpec,
    pub simulate: Option<SimulateSpec>,
    pub ehrenfest: Option<EhrenfestSpec>,
    pub probe: Option<ProbeSpec>,
    pub check: Option<CheckSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Uniform {
        #[serde(default)]
        e: [f64; 3],
        #[serde(default)]
        h: [f64; 3],
    },
    GaussianWell {
        depth: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    LinearGradientB {
        b0: f64,
        gradient: f64,
    },
    /// CSV table along x; relative paths are looked up next to the scenario, then in FW_DATA_DIR.
    Table {
        path: PathBuf,
        length_scale: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiscretizationSpec {
    MomentumBlock {
        momentum: [f64; 3],
    },
    /// Either `box_length` or `momentum_half_width` (L = πħN/w) fixes the box.
    PeriodicGrid {
        points: usize,
        box_length: Option<f64>,
        momentum_half_width: Option<f64>,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        bloch_momentum: f64,
        #[serde(default)]
        transverse: [f64; 2],
    },
    LandauLevels {
        levels: usize,
        #[serde(default)]
        pz: f64,
        #[serde(default)]
        ky: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathSpec {
    #[default]
    Auto,
    Reduced,
    Full,
    Exact,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    #[serde(default)]
    pub path: PathSpec,
    /// Momentum band on which norms are measured, as (center, half width).
    pub band: Option<[f64; 2]>,
}

impl TransformSpec {
    pub fn path_choice(&self) -> PathChoice {
        match self.path {
            PathSpec::Reduced => PathChoice::Reduced,
            PathSpec::Full => PathChoice::Full,
            PathSpec::Auto | PathSpec::Exact => PathChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsSpec {
    #[default]
    SpinHalf,
    /// Spin-1/2 precession with the Lorentz force only.
    LorentzOnly,
    Scalar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub t_end: f64,
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    pub position: [f64; 3],
    pub momentum: [f64; 3],
    pub polarization: Option<[f64; 3]>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default)]
    pub project_polarization: bool,
    #[serde(default)]
    pub override_validity: bool,
    #[serde(default = "default_threshold")]
    pub validity_threshold: f64,
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

fn default_threshold() -> f64 {
    DEFAULT_VALIDITY_THRESHOLD
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EhrenfestSpec {
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
    pub dt: f64,
    /// Spinor of the packet; defaults to the first upper component.
    pub spinor: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub hbar: Vec<f64>,
    #[serde(default = "yes")]
    pub eriksen: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// Number of random commuting-case triples.
    pub samples: usize,
    /// Spatial dimension of each triple (spinor rank 2 doubles it).
    pub dim: usize,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        s.particle.validate().map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let FieldSpec::Table { path: table, .. } = &mut s.field {
            *table = resolve_table(table, path.parent())?;
        }
        Ok(s)
    }

    /// Checks that the sections `task` needs are present and in range.
    pub fn validate_for(&self, task: Task) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Parse(m));
        if let Some(t) = self.task {
            if t != task {
                return bad(format!("scenario is for task {}, not {}", task_name(t), task_name(task)));
            }
        }
        let task_section = match task {
            Task::Simulate => self.simulate.is_some(),
            Task::Ehrenfest => self.ehrenfest.is_some(),
            Task::Probe => self.probe.is_some(),
            Task::Check => self.check.is_some(),
            Task::Transform => true,
        };
        if !task_section {
            return bad(format!("task {0} needs its [{0}] section", task_name(task)));
        }
        if matches!(task, Task::Transform | Task::Ehrenfest | Task::Probe) && self.discretization.is_none() {
            return bad(format!("task {} needs a [discretization] section", task_name(task)));
        }
        if let Some(DiscretizationSpec::PeriodicGrid {
            points,
            box_length,
            momentum_half_width,
            ..
        }) = &self.discretization
        {
            if !(4..=1024).contains(points) {
                return bad(format!("discretization.points = {points} outside 4..=1024"));
            }
            if box_length.is_some() == momentum_half_width.is_some() {
                return bad("periodic grid needs exactly one of box_length, momentum_half_width".into());
            }
        }
        if let Some(DiscretizationSpec::LandauLevels { levels, .. }) = &self.discretization {
            if !(1..=512).contains(levels) {
                return bad(format!("discretization.levels = {levels} outside 1..=512"));
            }
        }
        if let Some(s) = &self.simulate {
            if !(s.t_end > 0.0) || !(s.rtol > 0.0) || !(s.atol > 0.0) {
                return bad("simulate.t_end, rtol and atol must be positive".into());
            }
            let scalar = s.dynamics == DynamicsSpec::Scalar;
            if !scalar && s.polarization.is_none() {
                return bad("spin-1/2 dynamics need simulate.polarization".into());
            }
        }
        if let Some(p) = &self.probe {
            if p.hbar.len() < 3 || p.hbar.iter().any(|h| !(*h > 0.0)) {
                return bad("probe.hbar needs at least three positive values".into());
            }
        }
        if let Some(c) = &self.check {
            if c.samples == 0 || !(1..=32).contains(&c.dim) {
                return bad("check.samples must be positive and check.dim in 1..=32".into());
            }
        }
        if let Some(e) = &self.ehrenfest {
            if !(e.width > 0.0) || !(e.dt > 0.0) {
                return bad("ehrenfest.width and dt must be positive".into());
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Result<FieldConfiguration, CliError> {
        Ok(match &self.field {
            FieldSpec::Zero => FieldConfiguration::Zero,
            FieldSpec::Uniform { e, h } => FieldConfiguration::uniform(*e, *h),
            FieldSpec::GaussianWell { depth, width, center } => FieldConfiguration::GaussianWell {
                depth: *depth,
                width: *width,
                center: *center,
            },
            FieldSpec::LinearGradientB { b0, gradient } => FieldConfiguration::LinearGradientB {
                b0: *b0,
                gradient: *gradient,
            },
            FieldSpec::Table { path, length_scale } => {
                FieldConfiguration::Table(Arc::new(SampledField::from_csv(path, *length_scale)?))
            }
        })
    }

    /// The discretization at a given ħ (a momentum window fixes the box through ħ).
    pub fn scheme(&self, hbar: f64) -> Result<DiscretizationScheme, CliError> {
        let spec = self
            .discretization
            .as_ref()
            .ok_or_else(|| CliError::Parse("missing [discretization]".into()))?;
        Ok(match spec {
            DiscretizationSpec::MomentumBlock { momentum } => DiscretizationScheme::MomentumBlock {
                momentum: V3::from(*momentum),
            },
            DiscretizationSpec::PeriodicGrid {
                points,
                box_length,
                momentum_half_width,
                center,
                bloch_momentum,
                transverse,
            } => {
                let mut grid = match (box_length, momentum_half_width) {
                    (Some(l), _) => PeriodicGrid {
                        points: *points,
                        box_length: *l,
                        center: 0.0,
                        bloch_momentum: 0.0,
                        transverse: [0.0; 2],
                    },
                    (None, Some(w)) => PeriodicGrid::with_momentum_window(*points, 0.0, *w, hbar),
                    (None, None) => unreachable!("validated"),
                };
                grid.center = *center;
                grid.bloch_momentum = *bloch_momentum;
                grid.transverse = *transverse;
                DiscretizationScheme::PeriodicGrid(grid)
            }
            DiscretizationSpec::LandauLevels { levels, pz, ky } => DiscretizationScheme::LandauLevels {
                levels: *levels,
                pz: *pz,
                ky: *ky,
            },
        })
    }

    pub fn params(&self) -> ParticleParams {
        self.particle
    }
}

pub fn task_name(t: Task) -> &'static str {
    match t {
        Task::Transform => "transform",
        Task::Simulate => "simulate",
        Task::Ehrenfest => "ehrenfest",
        Task::Probe => "probe",
        Task::Check => "check",
    }
}

/// Where preset tables live: FW_DATA_DIR, else the data directory shipped with the crate.
pub fn data_dir() -> PathBuf {
    std::env::var_os("FW_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"))
}

fn resolve_table(path: &Path, scenario_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    if path.is_absolute() {
        return if path.exists() {
            Ok(path.to_path_buf())
        } else {
            Err(CliError::Io(format!("field table {} not found", path.display())))
        };
    }
    let candidates: Vec<PathBuf> = scenario_dir
        .map(|d| d.join(path))
        .into_iter()
        .chain(std::iter::once(data_dir().join(path)))
        .collect();
    candidates
        .iter()
        .find(|p| p.exists())
        .cloned()
        .ok_or_else(|| CliError::Io(format!("field table {} not found (looked in {candidates:?})", path.display())))
}

/// Resolves a table path for presets, which carry no scenario directory.
pub fn resolve_preset_tables(s: &mut Scenario) -> Result<(), CliError> {
    if let FieldSpec::Table { path, .. } = &mut s.field {
        *path = resolve_table(path, None)?;
    }
    Ok(())
}
