//! Semiclassical equations: structure, gradient forces, and integration.

use fw_core::hamiltonians::{eval_fw_spin_half_analytic, heisenberg_rhs, matrices, DiscretizationScheme, FieldConfiguration, ParticleParams, V3};
use fw_core::linalg::{CVector, C64};
use fw_core::oracle::WavepacketState;
use fw_core::semiclassical::{
    integrate, rhs_scalar, rhs_spin_half, velocity, Dynamics, IntegrationControls, PhaseSpinState, RotationTracker, StepControls,
};
use fw_core::FwError;
use proptest::prelude::*;

fn v3() -> impl Strategy<Value = V3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| V3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = V3> {
    v3().prop_filter("nonzero", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

proptest! {
    #[test]
    fn precession_is_orthogonal_to_polarization(
        e in v3(), h in v3(), pi in v3(), p in unit(), g in 0.5f64..4.0, eta in -1.0f64..1.0, hbar in 0.01f64..1.0
    ) {
        let params = ParticleParams::new(1.0, 1.0, g, eta, 1.0, hbar).unwrap();
        let field = FieldConfiguration::Uniform { e, h };
        let rhs = rhs_spin_half(&PhaseSpinState::spin_half(V3::zeros(), pi, p), &field, &params).unwrap();
        let dp = rhs.dp_dt();
        prop_assert!(p.dot(&dp).abs() <= 1e-12 * (1.0 + dp.norm()));
    }

    #[test]
    fn speed_stays_below_c(pi in v3(), scale in 0.0f64..100.0, c in 0.5f64..3.0) {
        let params = ParticleParams::new(1.3, 1.0, 2.0, 0.0, c, 1.0).unwrap();
        let v = velocity(&(pi * scale), &params);
        prop_assert!(v.norm() < c);
    }

    #[test]
    fn magnetic_force_does_no_work(h in v3(), pi in v3()) {
        let params = ParticleParams::natural();
        let f = rhs_scalar(&PhaseSpinState::scalar(V3::zeros(), pi), &FieldConfiguration::Uniform { e: V3::zeros(), h }, &params).unwrap();
        prop_assert!(f.dot(&pi).abs() <= 1e-14);
    }
}

/// W(r) with −∇W the spin-dependent force at fixed π and P, written out term by term.
fn spin_potential(r: &V3, pi: &V3, p: &V3, field: &FieldConfiguration, params: &ParticleParams) -> f64 {
    let s = field.sample(r).unwrap();
    let (c, mc2) = (params.c, params.rest_energy());
    let eps = (mc2 * mc2 + c * c * pi.norm_squared()).sqrt();
    let k = 1.0 / (eps * (eps + mc2));
    let mu0 = params.charge * params.hbar / (2.0 * params.mass * c);
    let mu = (params.g - 2.0) * mu0 / 2.0;
    let pie = p.dot(&pi.cross(&s.e));
    -(mu + mu0 * mc2 / eps) * p.dot(&s.h) + (mu * c / eps + mu0 * params.mass * c * c * c * k) * pie + mu * c * c * k * p.dot(pi) * s.h.dot(pi)
}

fn check_gradient_force(field: &FieldConfiguration, r: V3, pi: V3, p: V3) {
    let params = ParticleParams::new(1.0, 1.0, 2.7, 0.0, 1.0, 0.1).unwrap();
    let f = rhs_spin_half(&PhaseSpinState::spin_half(r, pi, p), field, &params).unwrap().force.stern_gerlach();
    let step = 1e-5;
    for i in 0..3 {
        let mut d = V3::zeros();
        d[i] = step;
        let fd = -(spin_potential(&(r + d), &pi, &p, field, &params) - spin_potential(&(r - d), &pi, &p, field, &params)) / (2.0 * step);
        assert!((f[i] - fd).abs() <= 1e-9 * (1.0 + f.norm()), "component {i}: {} vs {fd}", f[i]);
    }
}

#[test]
fn stern_gerlach_force_is_the_gradient_of_the_spin_energy() {
    let gradient_b = FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.3 };
    check_gradient_force(&gradient_b, V3::new(0.4, -0.2, 0.7), V3::new(0.3, 0.5, -0.8), V3::new(0.6, 0.0, 0.8));
    let well = FieldConfiguration::GaussianWell { depth: 0.4, width: 0.8, center: 0.1 };
    check_gradient_force(&well, V3::new(0.5, 0.2, 0.0), V3::new(0.2, 0.9, -0.4), V3::new(0.0, 0.6, 0.8));
}

#[test]
fn rest_frame_precession_matches_the_commutator() {
    let params = ParticleParams::new(1.0, 1.0, 2.6, 0.3, 1.0, 0.2).unwrap();
    let field = FieldConfiguration::uniform([0.2, -0.1, 0.4], [0.3, 0.5, -0.7]);
    let fw = eval_fw_spin_half_analytic(&field, &params, &DiscretizationScheme::MomentumBlock { momentum: V3::zeros() }).unwrap();
    let sp = fw.total.space().clone();
    let (theta, phi) = (0.9f64, 2.1f64);
    let p = V3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
    let psi = CVector::from_vec(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ]);
    let psi = WavepacketState::new(psi, sp.clone()).unwrap();
    let rhs = rhs_spin_half(&PhaseSpinState::spin_half(V3::zeros(), V3::zeros(), p), &field, &params).unwrap();
    let pol = matrices::polarization();
    for (i, m) in pol.iter().enumerate() {
        let op = sp.operator(m.clone()).unwrap();
        assert!((psi.expectation(&op).unwrap().re - p[i]).abs() <= 1e-14);
        let rate = heisenberg_rhs(&fw.total, &op, &params).unwrap();
        let q = psi.expectation(&rate).unwrap();
        assert!((q.re - rhs.dp_dt()[i]).abs() <= 1e-12, "component {i}: {} vs {}", q.re, rhs.dp_dt()[i]);
    }
}

#[test]
fn scalar_energy_is_conserved_in_a_well() {
    let params = ParticleParams::natural().with_hbar(1e-3);
    let field = FieldConfiguration::GaussianWell { depth: 0.3, width: 2.0, center: 0.0 };
    let start = PhaseSpinState::scalar(V3::new(-1.0, 0.0, 0.0), V3::new(0.4, 0.1, 0.0));
    let controls = IntegrationControls {
        dynamics: Dynamics::Scalar,
        step: StepControls {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        },
        ..Default::default()
    };
    let traj = integrate(&start, &field, &params, 100.0, &controls).unwrap();
    assert!(traj.max_energy_drift.unwrap() <= 1e-10, "{:?}", traj.max_energy_drift);
}

#[test]
fn stern_gerlach_dynamics_keep_unit_polarization() {
    let params = ParticleParams::new(1.0, 1.0, 2.3, 0.0, 1.0, 0.01).unwrap();
    let field = FieldConfiguration::LinearGradientB { b0: 1.0, gradient: 0.05 };
    let start = PhaseSpinState::spin_half(V3::zeros(), V3::new(0.5, 0.0, 0.1), V3::new(0.0, 0.6, 0.8));
    let traj = integrate(&start, &field, &params, 20.0, &IntegrationControls::default()).unwrap();
    assert!(traj.max_polarization_drift <= 1e-9);
    assert!(traj.max_energy_drift.is_none());
}

#[test]
fn validity_failure_needs_an_override() {
    let params = ParticleParams::natural().with_hbar(0.1);
    let field = FieldConfiguration::GaussianWell { depth: 0.1, width: 1.0, center: 0.0 };
    let start = PhaseSpinState::spin_half(V3::zeros(), V3::new(0.5, 0.0, 0.0), V3::z());
    let mut controls = IntegrationControls::default();
    match integrate(&start, &field, &params, 1.0, &controls) {
        Err(FwError::Validity(r)) => {
            assert!(!r.ok);
            assert!((r.lambda_over_l - 2.0 * std::f64::consts::PI * 0.1 / 0.5).abs() <= 1e-14);
        }
        other => panic!("expected a validity error, got {other:?}"),
    }
    controls.override_validity = true;
    let traj = integrate(&start, &field, &params, 1.0, &controls).unwrap();
    assert_eq!(traj.warnings.len(), 1);
    assert!(!traj.validity.ok);
}

#[test]
fn spin_half_dynamics_need_a_polarization() {
    let params = ParticleParams::natural();
    let start = PhaseSpinState::scalar(V3::zeros(), V3::x());
    let r = integrate(&start, &FieldConfiguration::Zero, &params, 1.0, &IntegrationControls::default());
    assert!(matches!(r, Err(FwError::InvalidParameter(_))));
}

#[test]
fn rotation_tracker_unwraps_many_turns() {
    let axis = V3::new(0.0, 0.0, 2.0);
    let mut t = RotationTracker::new(axis);
    let turns = 7.25;
    let steps = 1000;
    for i in 0..=steps {
        let a = 2.0 * std::f64::consts::PI * turns * i as f64 / steps as f64;
        t.update(&V3::new(a.cos(), a.sin(), 0.3));
    }
    assert!((t.angle() - 2.0 * std::f64::consts::PI * turns).abs() <= 1e-12);

    let mut back = RotationTracker::new(axis);
    for i in 0..=steps {
        let a = -3.0 * i as f64 / steps as f64;
        back.update(&V3::new(a.cos(), a.sin(), 0.0));
    }
    assert!((back.angle() + 3.0).abs() <= 1e-12);
}

#[test]
fn samples_land_on_the_requested_grid() {
    let params = ParticleParams::natural();
    let field = FieldConfiguration::uniform([0.0; 3], [0.0, 0.0, 1.0]);
    let controls = IntegrationControls {
        dynamics: Dynamics::Scalar,
        sample_interval: Some(0.25),
        ..Default::default()
    };
    let traj = integrate(&PhaseSpinState::scalar(V3::zeros(), V3::x()), &field, &params, 2.0, &controls).unwrap();
    assert_eq!(traj.samples.len(), 9);
    for (i, s) in traj.samples.iter().enumerate() {
        assert!((s.t - 0.25 * i as f64).abs() <= 1e-12);
    }
}

#[test]
fn moving_precession_matches_the_commutator() {
    // With π a c-number the analytic Hamiltonian is linear in Π, so the Heisenberg
    // rate in a pure spin state is exactly the semiclassical precession, spin-orbit
    // and helicity terms included.
    let params = ParticleParams::new(1.0, 1.0, 2.6, 0.3, 1.0, 0.2).unwrap();
    let field = FieldConfiguration::uniform([0.2, -0.1, 0.4], [0.3, 0.5, -0.7]);
    let pi = V3::new(0.7, -1.1, 0.4);
    let fw = eval_fw_spin_half_analytic(&field, &params, &DiscretizationScheme::MomentumBlock { momentum: pi }).unwrap();
    let sp = fw.total.space().clone();
    let (theta, phi) = (2.2f64, -0.4f64);
    let p = V3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
    let psi = CVector::from_vec(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ]);
    let psi = WavepacketState::new(psi, sp.clone()).unwrap();
    let rhs = rhs_spin_half(&PhaseSpinState::spin_half(V3::zeros(), pi, p), &field, &params).unwrap();
    assert!(rhs.precession.dirac_spin_orbit.norm() > 1e-2);
    let pol = matrices::polarization();
    for (i, m) in pol.iter().enumerate() {
        let op = sp.operator(m.clone()).unwrap();
        let q = psi.expectation(&heisenberg_rhs(&fw.total, &op, &params).unwrap()).unwrap();
        assert!((q.re - rhs.dp_dt()[i]).abs() <= 1e-12, "component {i}: {} vs {}", q.re, rhs.dp_dt()[i]);
    }
}
