//! Semiclassical force and polarization equations, their integration and the
//! validity diagnostics of the semiclassical limit.

pub mod dop853;

use std::f64::consts::PI;

use nalgebra::SVector;
use serde::Serialize;

use crate::error::{FwError, Result};
use crate::hamiltonians::{FieldConfiguration, ParticleParams, V3};

pub use dop853::{StepControls, StepStats};

pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.05;

/// Position, kinetic momentum π = p − (e/c)A and polarization P = S/S.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpinState {
    pub r: V3,
    pub pi: V3,
    pub polarization: Option<V3>,
}

impl PhaseSpinState {
    pub fn scalar(r: V3, pi: V3) -> Self {
        Self {
            r,
            pi,
            polarization: None,
        }
    }

    pub fn spin_half(r: V3, pi: V3, polarization: V3) -> Self {
        Self {
            r,
            pi,
            polarization: Some(polarization),
        }
    }
}

/// λ = 2πħ/|π| against the field scale l.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub lambda_over_l: f64,
    pub pl_over_hbar: f64,
    pub threshold: f64,
    pub ok: bool,
}

pub fn validity_report(state: &PhaseSpinState, field: &FieldConfiguration, params: &ParticleParams, threshold: f64) -> ValidityReport {
    let p = state.pi.norm();
    let l = field.length_scale();
    let (lambda_over_l, pl_over_hbar) = if l.is_infinite() {
        (0.0, f64::INFINITY)
    } else if p == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (2.0 * PI * params.hbar / (p * l), p * l / params.hbar)
    };
    ValidityReport {
        lambda_over_l,
        pl_over_hbar,
        threshold,
        ok: lambda_over_l <= threshold,
    }
}

/// Terms of dπ/dt. The first two form the Lorentz force; the rest are the
/// Stern–Gerlach force, first order in ħ.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ForceTerms {
    /// eE
    pub electric: V3,
    /// (ec/ε′) π×H
    pub magnetic: V3,
    /// μ′∇(P·H)
    pub anomalous_gradient: V3,
    /// (μ₀mc²/ε′)∇(P·H)
    pub dirac_gradient: V3,
    /// −(μ′c/ε′)∇(P·[π×E])
    pub anomalous_spin_orbit: V3,
    /// −(μ₀mc³/(ε′(ε′+mc²)))∇(P·[π×E])
    pub dirac_spin_orbit: V3,
    /// −(μ′c²/(ε′(ε′+mc²)))(P·π)∇(H·π)
    pub anomalous_helicity: V3,
}

impl ForceTerms {
    pub fn lorentz(&self) -> V3 {
        self.electric + self.magnetic
    }

    pub fn stern_gerlach(&self) -> V3 {
        self.anomalous_gradient + self.dirac_gradient + self.anomalous_spin_orbit + self.dirac_spin_orbit + self.anomalous_helicity
    }

    pub fn total(&self) -> V3 {
        self.lorentz() + self.stern_gerlach()
    }
}

/// Terms of dP/dt, each P × (something), already divided by ħ.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PrecessionTerms {
    /// 2μ′ P×H
    pub anomalous_magnetic: V3,
    /// (2μ₀mc²/ε′) P×H
    pub dirac_magnetic: V3,
    /// −(2μ′c/ε′) P×[π×E]
    pub anomalous_spin_orbit: V3,
    /// −(2μ₀mc³/(ε′(ε′+mc²))) P×[π×E]
    pub dirac_spin_orbit: V3,
    /// −(2μ′c²/(ε′(ε′+mc²))) (P×π)(π·H)
    pub anomalous_helicity: V3,
    /// 2d P×E
    pub edm_electric: V3,
    /// −(2dc²/(ε′(ε′+mc²))) (P×π)(π·E)
    pub edm_helicity: V3,
    /// (2dc/ε′) P×[π×H]
    pub edm_motional: V3,
}

impl PrecessionTerms {
    pub fn total(&self) -> V3 {
        self.anomalous_magnetic
            + self.dirac_magnetic
            + self.anomalous_spin_orbit
            + self.dirac_spin_orbit
            + self.anomalous_helicity
            + self.edm_electric
            + self.edm_helicity
            + self.edm_motional
    }

    pub fn magnetic_moment_part(&self) -> V3 {
        self.anomalous_magnetic + self.dirac_magnetic + self.anomalous_spin_orbit + self.dirac_spin_orbit + self.anomalous_helicity
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpinHalfRhs {
    /// dr/dt = c²π/ε′
    pub velocity: V3,
    pub force: ForceTerms,
    pub precession: PrecessionTerms,
    pub energy: f64,
}

impl SpinHalfRhs {
    pub fn dpi_dt(&self) -> V3 {
        self.force.total()
    }

    pub fn dp_dt(&self) -> V3 {
        self.precession.total()
    }
}

/// dr/dt = c²π/ε′
pub fn velocity(pi: &V3, params: &ParticleParams) -> V3 {
    pi * (params.c * params.c / params.energy(pi.norm_squared()))
}

pub fn rhs_spin_half(state: &PhaseSpinState, field: &FieldConfiguration, params: &ParticleParams) -> Result<SpinHalfRhs> {
    let p = state
        .polarization
        .ok_or_else(|| FwError::InvalidParameter("spin-1/2 state without polarization".into()))?;
    let s = field.sample(&state.r)?;
    let g = field.gradients(&state.r)?;
    let pi = state.pi;
    let (e, c, m) = (params.charge, params.c, params.mass);
    let mc2 = params.rest_energy();
    let eps = params.energy(pi.norm_squared());
    let k = 1.0 / (eps * (eps + mc2));
    let (mu0, mu, d) = (params.mu0(), params.mu_anomalous(), params.edm());

    // ∇(a·F) = (∂F/∂x)ᵀ a for fixed a.
    let grad_p_h = g.dh.transpose() * p;
    let grad_p_pie = g.de.transpose() * p.cross(&pi);
    let grad_h_pi = g.dh.transpose() * pi;

    let force = ForceTerms {
        electric: s.e * e,
        magnetic: pi.cross(&s.h) * (e * c / eps),
        anomalous_gradient: grad_p_h * mu,
        dirac_gradient: grad_p_h * (mu0 * mc2 / eps),
        anomalous_spin_orbit: grad_p_pie * (-mu * c / eps),
        dirac_spin_orbit: grad_p_pie * (-mu0 * m * c * c * c * k),
        anomalous_helicity: grad_h_pi * (-mu * c * c * k * p.dot(&pi)),
    };

    let inv_hbar = 1.0 / params.hbar;
    let p_h = p.cross(&s.h);
    let p_pie = p.cross(&pi.cross(&s.e));
    let p_pi = p.cross(&pi);
    let precession = PrecessionTerms {
        anomalous_magnetic: p_h * (2.0 * mu * inv_hbar),
        dirac_magnetic: p_h * (2.0 * mu0 * mc2 / eps * inv_hbar),
        anomalous_spin_orbit: p_pie * (-2.0 * mu * c / eps * inv_hbar),
        dirac_spin_orbit: p_pie * (-2.0 * mu0 * m * c * c * c * k * inv_hbar),
        anomalous_helicity: p_pi * (-2.0 * mu * c * c * k * pi.dot(&s.h) * inv_hbar),
        edm_electric: p.cross(&s.e) * (2.0 * d * inv_hbar),
        edm_helicity: p_pi * (-2.0 * d * c * c * k * pi.dot(&s.e) * inv_hbar),
        edm_motional: p.cross(&pi.cross(&s.h)) * (2.0 * d * c / eps * inv_hbar),
    };
    Ok(SpinHalfRhs {
        velocity: pi * (c * c / eps),
        force,
        precession,
        energy: eps,
    })
}

/// dπ/dt = eE + (ec/√(m²c⁴ + c²π²)) π×H
pub fn rhs_scalar(state: &PhaseSpinState, field: &FieldConfiguration, params: &ParticleParams) -> Result<V3> {
    let s = field.sample(&state.r)?;
    let eps = params.energy(state.pi.norm_squared());
    Ok(s.e * params.charge + state.pi.cross(&s.h) * (params.charge * params.c / eps))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    Scalar,
    /// Spin-1/2; with `stern_gerlach` false only the Lorentz force moves the particle.
    SpinHalf { stern_gerlach: bool },
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrationControls {
    pub step: StepControls,
    pub dynamics: Dynamics,
    /// Sampling interval; `None` records every accepted step.
    pub sample_interval: Option<f64>,
    /// Rescale P to unit length after each step.
    pub project_polarization: bool,
    pub override_validity: bool,
    pub validity_threshold: f64,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            step: StepControls::default(),
            dynamics: Dynamics::SpinHalf { stern_gerlach: true },
            sample_interval: None,
            project_polarization: false,
            override_validity: false,
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleDiagnostics {
    /// |P| − 1
    pub polarization_drift: f64,
    /// (ε′ + eΦ) − its initial value, when that is conserved.
    pub energy_drift: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseSpinState,
    pub energy: f64,
    pub diagnostics: SampleDiagnostics,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub method: &'static str,
    pub rtol: f64,
    pub atol: f64,
    pub stats: StepStats,
    pub validity: ValidityReport,
    pub warnings: Vec<String>,
    /// Largest |(|P| − 1)| over all accepted steps.
    pub max_polarization_drift: f64,
    pub max_energy_drift: Option<f64>,
}

type State9 = SVector<f64, 9>;

fn pack(s: &PhaseSpinState) -> State9 {
    let p = s.polarization.unwrap_or_else(V3::zeros);
    State9::from_iterator(s.r.iter().chain(s.pi.iter()).chain(p.iter()).cloned())
}

fn unpack(y: &State9, spin: bool) -> PhaseSpinState {
    PhaseSpinState {
        r: V3::new(y[0], y[1], y[2]),
        pi: V3::new(y[3], y[4], y[5]),
        polarization: spin.then(|| V3::new(y[6], y[7], y[8])),
    }
}

/// Integrates the semiclassical equations with DOP853. `observer` sees every accepted step.
pub fn integrate_observed(
    initial: &PhaseSpinState,
    field: &FieldConfiguration,
    params: &ParticleParams,
    t_end: f64,
    controls: &IntegrationControls,
    mut observer: impl FnMut(f64, &PhaseSpinState),
) -> Result<Trajectory> {
    params.validate()?;
    if !(t_end > 0.0) {
        return Err(FwError::InvalidParameter("t_end must be positive".into()));
    }
    let spin = matches!(controls.dynamics, Dynamics::SpinHalf { .. });
    if spin && initial.polarization.is_none() {
        return Err(FwError::InvalidParameter("spin-1/2 dynamics need an initial polarization".into()));
    }
    let validity = validity_report(initial, field, params, controls.validity_threshold);
    let mut warnings = Vec::new();
    if !validity.ok {
        if !controls.override_validity {
            return Err(FwError::Validity(validity));
        }
        warnings.push(format!(
            "semiclassical validity overridden: lambda/l = {:.4} > {}",
            validity.lambda_over_l, controls.validity_threshold
        ));
    }

    let conserves_energy = !matches!(controls.dynamics, Dynamics::SpinHalf { stern_gerlach: true });
    let total_energy = |s: &PhaseSpinState| -> Result<f64> {
        Ok(params.energy(s.pi.norm_squared()) + params.charge * field.sample(&s.r)?.phi)
    };
    let e0 = total_energy(initial)?;

    let rhs = |_t: f64, y: &State9| -> Result<State9> {
        let s = unpack(y, spin);
        let mut dy = State9::zeros();
        match controls.dynamics {
            Dynamics::Scalar => {
                let v = velocity(&s.pi, params);
                let f = rhs_scalar(&s, field, params)?;
                dy.fixed_rows_mut::<3>(0).copy_from(&v);
                dy.fixed_rows_mut::<3>(3).copy_from(&f);
            }
            Dynamics::SpinHalf { stern_gerlach } => {
                let r = rhs_spin_half(&s, field, params)?;
                let f = if stern_gerlach { r.force.total() } else { r.force.lorentz() };
                dy.fixed_rows_mut::<3>(0).copy_from(&r.velocity);
                dy.fixed_rows_mut::<3>(3).copy_from(&f);
                dy.fixed_rows_mut::<3>(6).copy_from(&r.precession.total());
            }
        }
        Ok(dy)
    };

    let outputs: Vec<f64> = match controls.sample_interval {
        Some(dt) if dt > 0.0 => {
            let n = (t_end / dt).ceil() as usize;
            let mut v: Vec<f64> = (1..n).map(|k| k as f64 * dt).filter(|t| *t < t_end).collect();
            v.push(t_end);
            v
        }
        Some(_) => return Err(FwError::InvalidParameter("sample interval must be positive".into())),
        None => vec![t_end],
    };

    let make_sample = |t: f64, s: PhaseSpinState| -> Result<Sample> {
        let energy = params.energy(s.pi.norm_squared());
        let polarization_drift = s.polarization.map(|p| p.norm() - 1.0).unwrap_or(0.0);
        let energy_drift = if conserves_energy { Some(total_energy(&s)? - e0) } else { None };
        Ok(Sample {
            t,
            state: s,
            energy,
            diagnostics: SampleDiagnostics {
                polarization_drift,
                energy_drift,
            },
        })
    };

    let mut samples = vec![make_sample(0.0, *initial)?];
    let record_every_step = controls.sample_interval.is_none();
    let mut max_pol: f64 = 0.0;
    let mut max_energy: f64 = 0.0;
    let mut stepped = Vec::new();
    let (_, stats) = dop853::integrate(rhs, 0.0, pack(initial), &outputs, &controls.step, |t, y| {
        if spin && controls.project_polarization {
            let n = (y[6] * y[6] + y[7] * y[7] + y[8] * y[8]).sqrt();
            if n > 0.0 {
                for i in 6..9 {
                    y[i] /= n;
                }
            }
        }
        let s = unpack(y, spin);
        if let Some(p) = s.polarization {
            max_pol = max_pol.max((p.norm() - 1.0).abs());
        }
        if conserves_energy {
            max_energy = max_energy.max((total_energy(&s)? - e0).abs());
        }
        observer(t, &s);
        if record_every_step || outputs.contains(&t) {
            stepped.push((t, s));
        }
        Ok(())
    })?;
    for (t, s) in stepped {
        samples.push(make_sample(t, s)?);
    }
    Ok(Trajectory {
        samples,
        method: "DOP853",
        rtol: controls.step.rtol,
        atol: controls.step.atol,
        stats,
        validity,
        warnings,
        max_polarization_drift: max_pol,
        max_energy_drift: conserves_energy.then_some(max_energy),
    })
}

pub fn integrate(
    initial: &PhaseSpinState,
    field: &FieldConfiguration,
    params: &ParticleParams,
    t_end: f64,
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    integrate_observed(initial, field, params, t_end, controls, |_, _| {})
}

/// Accumulates the rotation angle of a vector about a fixed axis across calls, so
/// that frequencies can be measured over many turns without branch jumps.
#[derive(Clone, Debug)]
pub struct RotationTracker {
    axis: V3,
    u: V3,
    w: V3,
    last: Option<f64>,
    total: f64,
}

impl RotationTracker {
    pub fn new(axis: V3) -> Self {
        let axis = axis.normalize();
        let trial = if axis.x.abs() < 0.9 { V3::x() } else { V3::y() };
        let u = (trial - axis * axis.dot(&trial)).normalize();
        let w = axis.cross(&u);
        Self {
            axis,
            u,
            w,
            last: None,
            total: 0.0,
        }
    }

    pub fn axis(&self) -> V3 {
        self.axis
    }

    pub fn update(&mut self, v: &V3) {
        let a = v.dot(&self.w).atan2(v.dot(&self.u));
        if let Some(prev) = self.last {
            let mut d = a - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            self.total += d;
        }
        self.last = Some(a);
    }

    /// Signed accumulated angle (right-handed about the axis).
    pub fn angle(&self) -> f64 {
        self.total
    }
}
