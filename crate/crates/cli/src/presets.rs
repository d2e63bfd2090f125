//! Built-in scenarios.

use serde::Serialize;

use crate::scenario::{resolve_preset_tables, Scenario};
use crate::CliError;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub task: &'static str,
    /// Which Hamiltonian or equation of motion the preset exercises.
    pub model: &'static str,
    pub description: &'static str,
    #[serde(skip)]
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "free-dirac",
        task: "transform",
        model: "Dirac Hamiltonian, free particle; closed-form FW result beta*sqrt(m^2c^4 + c^2p^2)",
        description: "Single momentum block with no fields.",
        toml: r#"
name = "free-dirac"
task = "transform"
hamiltonian = "dirac-pauli"

[field]
kind = "zero"

[discretization]
kind = "momentum-block"
momentum = [0.3, -0.4, 1.2]
"#,
    },
    Preset {
        name: "dirac-pauli-uniform-B",
        task: "transform",
        model: "Dirac-Pauli Hamiltonian with anomalous magnetic and electric dipole moments",
        description: "Uniform H along z with a crossed E, Landau-level basis.",
        toml: r#"
name = "dirac-pauli-uniform-B"
task = "transform"
hamiltonian = "dirac-pauli"

[particle]
g = 2.5
eta = 0.4
hbar = 0.05

[field]
kind = "uniform"
e = [0.3, 0.0, 0.0]
h = [0.0, 0.0, 1.0]

[discretization]
kind = "landau-levels"
levels = 40
pz = 1.0

[transform]
band = [0.0, 1.0]
"#,
    },
    Preset {
        name: "feshbach-villars-gaussian-well",
        task: "probe",
        model: "Feshbach-Villars spin-0 Hamiltonian and its FW form beta*sqrt(m^2c^4 + c^2pi^2) + e*Phi",
        description: "Gaussian well on a Bloch-offset periodic grid; order in hbar of the residuals.",
        toml: r#"
name = "feshbach-villars-gaussian-well"
task = "probe"
hamiltonian = "feshbach-villars"

[field]
kind = "gaussian-well"
depth = 0.3
width = 4.0

[discretization]
kind = "periodic-grid"
points = 128
momentum_half_width = 0.3
bloch_momentum = 2.0

[transform]
band = [2.0, 0.21]

[probe]
hbar = [0.02, 0.04, 0.08, 0.16]
"#,
    },
    Preset {
        name: "g-minus-2",
        task: "simulate",
        model: "Semiclassical force and polarization equations; spin precession relative to momentum",
        description: "Nearly resting electron-like particle in uniform H for 100 cyclotron periods.",
        toml: r#"
name = "g-minus-2"
task = "simulate"
hamiltonian = "dirac-pauli"

[particle]
g = 2.002319
hbar = 0.01

[field]
kind = "uniform"
h = [0.0, 0.0, 1.0]

[simulate]
t_end = 628.3185307179587
sample_interval = 0.5
position = [0.0, 0.0, 0.0]
momentum = [1e-5, 0.0, 0.0]
polarization = [1.0, 0.0, 0.0]
rtol = 1e-13
atol = 1e-16
"#,
    },
    Preset {
        name: "stern-gerlach",
        task: "simulate",
        model: "Semiclassical force with the Stern-Gerlach gradient terms",
        description: "Polarized particle crossing a linear gradient of H_z.",
        toml: r#"
name = "stern-gerlach"
task = "simulate"
hamiltonian = "dirac-pauli"

[particle]
g = 2.5
hbar = 0.1

[field]
kind = "linear-gradient-b"
b0 = 1.0
gradient = 0.01

[simulate]
t_end = 50.0
sample_interval = 0.25
position = [0.0, 0.0, 0.0]
momentum = [0.5, 0.0, 0.0]
polarization = [0.0, 0.0, 1.0]
"#,
    },
    Preset {
        name: "cyclotron-scalar",
        task: "simulate",
        model: "Scalar-particle Lorentz dynamics",
        description: "Relativistic cyclotron motion, |pi| = mc, ten periods.",
        toml: r#"
name = "cyclotron-scalar"
task = "simulate"
hamiltonian = "feshbach-villars"

[field]
kind = "uniform"
h = [0.0, 0.0, 1.0]

[simulate]
t_end = 88.85765876316732
sample_interval = 0.1
dynamics = "scalar"
position = [0.0, 0.0, 0.0]
momentum = [1.0, 0.0, 0.0]
rtol = 1e-12
atol = 1e-14
"#,
    },
    Preset {
        name: "spinless-ehrenfest",
        task: "ehrenfest",
        model: "Spin-0 FW Hamiltonian, Ehrenfest averages against the scalar force",
        description: "Narrow packet on the flank of a Gaussian well.",
        toml: r#"
name = "spinless-ehrenfest"
task = "ehrenfest"
hamiltonian = "feshbach-villars"

[particle]
hbar = 0.001

[field]
kind = "gaussian-well"
depth = 0.1
width = 1.0

[discretization]
kind = "periodic-grid"
points = 256
box_length = 8.0
center = 0.7
bloch_momentum = 1.0

[ehrenfest]
center = 0.7
width = 0.05
momentum = 1.0
dt = 0.01
"#,
    },
    Preset {
        name: "tabulated-gaussian-well",
        task: "transform",
        model: "Feshbach-Villars spin-0 Hamiltonian with a tabulated potential",
        description: "The Gaussian well read from gaussian-well.csv in FW_DATA_DIR.",
        toml: r#"
name = "tabulated-gaussian-well"
task = "transform"
hamiltonian = "feshbach-villars"

[particle]
hbar = 0.05

[field]
kind = "table"
path = "gaussian-well.csv"
length_scale = 4.0

[discretization]
kind = "periodic-grid"
points = 64
box_length = 40.0
bloch_momentum = 2.0

[transform]
band = [2.0, 0.3]
"#,
    },
    Preset {
        name: "commuting-sweep",
        task: "check",
        model: "Exact FW transformation in the commuting case, against the Eriksen sign-function transform",
        description: "Random commuting triples drawn from the seed.",
        toml: r#"
name = "commuting-sweep"
task = "check"
hamiltonian = "dirac-pauli"
seed = 7

[field]
kind = "zero"

[check]
samples = 20
dim = 6
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load(name: &str) -> Result<Scenario, CliError> {
    let p = find(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Parse(format!("unknown preset '{name}'; known: {}", names.join(", ")))
    })?;
    let mut s = Scenario::from_toml(p.toml)?;
    resolve_preset_tables(&mut s)?;
    Ok(s)
}
