use serde::{Deserialize, Serialize};

use crate::error::{FwError, Result};

/// Particle constants in Gaussian units: π = p − (e/c)A. The charge is signed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleParams {
    pub mass: f64,
    pub charge: f64,
    pub g: f64,
    pub eta: f64,
    pub c: f64,
    pub hbar: f64,
}

impl Default for ParticleParams {
    fn default() -> Self {
        Self::natural()
    }
}

impl ParticleParams {
    pub fn new(mass: f64, charge: f64, g: f64, eta: f64, c: f64, hbar: f64) -> Result<Self> {
        let p = Self {
            mass,
            charge,
            g,
            eta,
            c,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    /// m = e = c = ħ = 1, g = 2, η = 0.
    pub fn natural() -> Self {
        Self {
            mass: 1.0,
            charge: 1.0,
            g: 2.0,
            eta: 0.0,
            c: 1.0,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("c", self.c), ("hbar", self.hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FwError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("charge", self.charge), ("g", self.g), ("eta", self.eta)] {
            if !v.is_finite() {
                return Err(FwError::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn with_hbar(self, hbar: f64) -> Self {
        Self { hbar, ..self }
    }

    /// μ₀ = eħ/(2mc)
    pub fn mu0(&self) -> f64 {
        self.charge * self.hbar / (2.0 * self.mass * self.c)
    }

    /// μ′ = ((g − 2)/2) μ₀
    pub fn mu_anomalous(&self) -> f64 {
        0.5 * (self.g - 2.0) * self.mu0()
    }

    /// d = (η/2) μ₀
    pub fn edm(&self) -> f64 {
        0.5 * self.eta * self.mu0()
    }

    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// ε′ = √(m²c⁴ + c²π²)
    pub fn energy(&self, pi_squared: f64) -> f64 {
        (self.rest_energy().powi(2) + self.c * self.c * pi_squared).sqrt()
    }
}
