//! The five tasks and `validate`. Each returns a JSON summary; CSV series go to the
//! output directory when one is given.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use fw_core::algebra::{BlockOperator, BasisTag, Space, Tolerances};
use fw_core::hamiltonians::{
    dirac_pauli_from, feshbach_villars_from, realize_checked, spin_half_analytic_from, spinless_analytic_from,
    DiscretizationScheme, FieldConfiguration, ParticleParams, Realization, FIELD_CONSISTENCY_TOL, V3,
};
use fw_core::linalg::{HermitianEigen, CMatrix, C64};
use fw_core::oracle::{self, WavepacketState, MAX_EVOLVE_DIM};
use fw_core::semiclassical::{
    integrate_observed, validity_report, Dynamics, IntegrationControls, PhaseSpinState, RotationTracker, StepControls,
    ValidityReport,
};
use fw_core::transform::{exact_fw, general_fw, hbar_scaling_probe, FwOptions, FwResult, ProbeInput, ProbeOptions, SplitHamiltonian};

use crate::output::{write_csv, write_summary, summary_json};
use crate::scenario::{task_name, DiscretizationSpec, DynamicsSpec, HamiltonianKind, PathSpec, Scenario, Task};
use crate::CliError;

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Replaces the probe's ħ list.
    pub hbar_values: Option<Vec<f64>>,
    /// Pass threshold for transform/check/ehrenfest; integrator rtol for simulate.
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

pub struct Outcome {
    pub summary: String,
    pub passed: bool,
}

pub fn run(task: Task, s: &Scenario, opts: &RunOptions) -> Result<Outcome, CliError> {
    s.validate_for(task)?;
    let out = opts.out.as_deref();
    let (result, passed) = match task {
        Task::Transform => transform(s, opts)?,
        Task::Simulate => simulate(s, opts, out)?,
        Task::Ehrenfest => ehrenfest(s, opts)?,
        Task::Probe => probe(s, opts, out)?,
        Task::Check => check(s, opts, out)?,
    };
    let summary = json!({
        "task": task_name(task),
        "scenario": s.name,
        "hamiltonian": s.hamiltonian,
        "particle": s.particle,
        "passed": passed,
        "result": result,
    });
    let text = match out {
        Some(dir) => write_summary(dir, &summary)?,
        None => summary_json(&summary)?,
    };
    Ok(Outcome { summary: text, passed })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn split_from(kind: HamiltonianKind, r: &Realization, params: &ParticleParams, tol: &Tolerances) -> fw_core::Result<SplitHamiltonian> {
    match kind {
        HamiltonianKind::DiracPauli => dirac_pauli_from(r, params, tol),
        HamiltonianKind::FeshbachVillars => feshbach_villars_from(r, params, tol),
    }
}

fn analytic_from(kind: HamiltonianKind, r: &Realization, params: &ParticleParams) -> fw_core::Result<BlockOperator> {
    match kind {
        HamiltonianKind::DiracPauli => Ok(spin_half_analytic_from(r, params)?.total),
        HamiltonianKind::FeshbachVillars => spinless_analytic_from(r, params),
    }
}

/// The kinetic momentum a discretization is built around.
fn representative_momentum(s: &Scenario) -> V3 {
    match &s.discretization {
        Some(DiscretizationSpec::MomentumBlock { momentum }) => V3::from(*momentum),
        Some(DiscretizationSpec::PeriodicGrid {
            bloch_momentum,
            transverse,
            ..
        }) => V3::new(*bloch_momentum, transverse[0], transverse[1]),
        Some(DiscretizationSpec::LandauLevels { pz, .. }) => {
            let perp = s.transform.band.map(|b| b[0]).unwrap_or(0.0);
            V3::new(perp, 0.0, *pz)
        }
        None => V3::zeros(),
    }
}

fn validity_at(s: &Scenario, field: &FieldConfiguration, params: &ParticleParams) -> ValidityReport {
    let state = PhaseSpinState::scalar(V3::zeros(), representative_momentum(s));
    validity_report(&state, field, params, fw_core::semiclassical::DEFAULT_VALIDITY_THRESHOLD)
}

fn projector(s: &Scenario, r: &Realization) -> Option<CMatrix> {
    s.transform.band.map(|[c, w]| r.band_projector(c, w))
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn transform(s: &Scenario, opts: &RunOptions) -> Result<(Value, bool), CliError> {
    let params = s.params();
    let field = s.field()?;
    let tol = Tolerances::default();
    let r = realize_checked(&field, &params, &s.scheme(params.hbar)?)?;
    let split = split_from(s.hamiltonian, &r, &params, &tol)?;
    let res: FwResult = match s.transform.path {
        PathSpec::Exact => exact_fw(&split, &tol)?,
        _ => general_fw(
            &split,
            &FwOptions {
                tol,
                path: s.transform.path_choice(),
            },
        )?,
    };
    let p = projector(s, &r);
    let p = p.as_ref();
    let scale = res.h_fw.upper_band_norm(p)?;
    let analytic = analytic_from(s.hamiltonian, &r, &params)?;
    let analytic_dev = relative((&res.h_fw - &analytic).upper_band_norm(p)?, scale);
    let eriksen = if split.space().dim() <= MAX_EVOLVE_DIM {
        match oracle::eriksen_fw(&split.hamiltonian(), &tol) {
            Ok(e) => json!({
                "upper_block_deviation": relative((&res.h_fw - &e.h_diag).upper_band_norm(p)?, scale),
                "odd_residual": e.odd_residual,
            }),
            Err(err) => json!({ "error": err.to_string() }),
        }
    } else {
        Value::Null
    };
    let threshold = opts.tolerance.unwrap_or(1e-10);
    let passed = res.residual_odd_norm <= threshold && res.unitarity_defect <= threshold;
    let upper = HermitianEigen::new(&res.h_fw.block(0, 0));
    Ok((
        json!({
            "basis": res.h_fw.basis().as_str(),
            "dim": res.h_fw.dim(),
            "path": res.path,
            "class": res.class,
            "residual_odd_norm": res.residual_odd_norm,
            "o_prime_norm": res.o_prime.band_norm(p)?,
            "unitarity_defect": res.unitarity_defect,
            "conjugation_defect": res.conjugation_defect,
            "analytic_upper_deviation": analytic_dev,
            "eriksen": eriksen,
            "lowest_upper_eigenvalue": upper.values.min(),
            "validity": validity_at(s, &field, &params),
            "tolerance": threshold,
        }),
        passed,
    ))
}

#[derive(Serialize)]
struct Frequencies {
    /// Signed rotation rate of π about the field direction.
    cyclotron: f64,
    spin: Option<f64>,
    /// (Ω_spin − ω_c)/ω_c
    anomaly: Option<f64>,
    expected_cyclotron: f64,
    expected_spin: Option<f64>,
    expected_anomaly: Option<f64>,
}

fn simulate(s: &Scenario, opts: &RunOptions, out: Option<&Path>) -> Result<(Value, bool), CliError> {
    let sim = s.simulate.as_ref().expect("validated");
    let params = s.params();
    let field = s.field()?;
    let dynamics = match sim.dynamics {
        DynamicsSpec::Scalar => Dynamics::Scalar,
        DynamicsSpec::SpinHalf => Dynamics::SpinHalf { stern_gerlach: true },
        DynamicsSpec::LorentzOnly => Dynamics::SpinHalf { stern_gerlach: false },
    };
    let rtol = opts.tolerance.unwrap_or(sim.rtol);
    let controls = IntegrationControls {
        step: StepControls {
            rtol,
            atol: sim.atol,
            ..StepControls::default()
        },
        dynamics,
        sample_interval: sim.sample_interval,
        project_polarization: sim.project_polarization,
        override_validity: sim.override_validity,
        validity_threshold: sim.validity_threshold,
    };
    let r0 = V3::from(sim.position);
    let pi0 = V3::from(sim.momentum);
    let initial = match (dynamics, sim.polarization) {
        (Dynamics::Scalar, _) => PhaseSpinState::scalar(r0, pi0),
        (_, Some(p)) => PhaseSpinState::spin_half(r0, pi0, V3::from(p)),
        (_, None) => unreachable!("validated"),
    };

    let h0 = field.sample(&r0)?.h;
    let mut trackers = (h0.norm() > 0.0).then(|| (RotationTracker::new(h0), RotationTracker::new(h0)));
    if let Some((a, b)) = trackers.as_mut() {
        a.update(&initial.pi);
        if let Some(p) = initial.polarization {
            b.update(&p);
        }
    }
    let traj = integrate_observed(&initial, &field, &params, sim.t_end, &controls, |_, st| {
        if let Some((a, b)) = trackers.as_mut() {
            a.update(&st.pi);
            if let Some(p) = st.polarization {
                b.update(&p);
            }
        }
    })?;

    let frequencies = trackers.map(|(a, b)| {
        let b_mag = h0.norm();
        let eps = params.energy(pi0.norm_squared());
        let e_zero = field.sample(&r0).map(|f| f.e.norm() == 0.0).unwrap_or(false);
        let wc = a.angle() / sim.t_end;
        let expected_cyclotron = -params.charge * params.c * b_mag / eps;
        let spin = initial.polarization.map(|_| b.angle() / sim.t_end);
        let expected_spin = (initial.polarization.is_some() && field.is_uniform() && e_zero && pi0.dot(&h0) == 0.0).then(|| {
            -2.0 / params.hbar * (params.mu_anomalous() + params.mu0() * params.rest_energy() / eps) * b_mag
        });
        Frequencies {
            cyclotron: wc,
            spin,
            anomaly: spin.map(|ws| (ws - wc) / wc),
            expected_cyclotron,
            expected_spin,
            expected_anomaly: expected_spin.map(|ws| (ws - expected_cyclotron) / expected_cyclotron),
        }
    });

    if let Some(dir) = out {
        let rows = traj.samples.iter().map(|smp| {
            let st = &smp.state;
            let p = st.polarization.unwrap_or_else(V3::zeros);
            vec![
                smp.t, st.r.x, st.r.y, st.r.z, st.pi.x, st.pi.y, st.pi.z, p.x, p.y, p.z, smp.energy,
                smp.diagnostics.polarization_drift,
            ]
        });
        write_csv(
            &dir.join("trajectory.csv"),
            &["t", "x", "y", "z", "pi_x", "pi_y", "pi_z", "P_x", "P_y", "P_z", "energy", "polarization_drift"],
            rows,
        )?;
    }
    let last = traj.samples.last().expect("trajectory has its initial sample");
    let final_state = json!({
        "t": last.t,
        "position": [last.state.r.x, last.state.r.y, last.state.r.z],
        "momentum": [last.state.pi.x, last.state.pi.y, last.state.pi.z],
        "polarization": last.state.polarization.map(|p| [p.x, p.y, p.z]),
    });
    Ok((
        json!({
            "method": traj.method,
            "rtol": traj.rtol,
            "atol": traj.atol,
            "stats": traj.stats,
            "samples": traj.samples.len(),
            "validity": traj.validity,
            "warnings": traj.warnings,
            "final": final_state,
            "max_polarization_drift": traj.max_polarization_drift,
            "max_energy_drift": traj.max_energy_drift,
            "frequencies": frequencies,
        }),
        true,
    ))
}

fn ehrenfest(s: &Scenario, opts: &RunOptions) -> Result<(Value, bool), CliError> {
    let spec = s.ehrenfest.as_ref().expect("validated");
    let params = s.params();
    let field = s.field()?;
    let tol = Tolerances::default();
    let scheme = s.scheme(params.hbar)?;
    let DiscretizationScheme::PeriodicGrid(grid) = &scheme else {
        return Err(CliError::Parse("ehrenfest needs a periodic-grid discretization".into()));
    };
    let r = realize_checked(&field, &params, &scheme)?;
    let rank = s.hamiltonian.spinor_rank();
    let space = r.space(rank)?;
    let spinor: Vec<C64> = match &spec.spinor {
        Some(v) => v.iter().map(|[a, b]| Complex::new(*a, *b)).collect(),
        None => (0..rank).map(|i| Complex::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
    };
    let psi0 = WavepacketState::gaussian_on_grid(
        &space,
        &grid.positions(),
        spec.center,
        spec.width,
        spec.momentum,
        params.hbar,
        &spinor,
    )?;
    let h_fw = analytic_from(s.hamiltonian, &r, &params)?;
    let obs = r.observables(rank)?;
    let rec = oracle::ehrenfest_check(&psi0, &h_fw, &obs, &field, &params, spec.dt, &tol)?;
    let threshold = opts.tolerance.unwrap_or(0.01);
    let passed = !rec.flagged && rec.relative_deviation <= threshold;
    Ok((
        json!({
            "record": rec,
            "norm_convention": psi0.convention,
            "tolerance": threshold,
        }),
        passed,
    ))
}

fn probe(s: &Scenario, opts: &RunOptions, out: Option<&Path>) -> Result<(Value, bool), CliError> {
    let spec = s.probe.as_ref().expect("validated");
    let hbars = opts.hbar_values.clone().unwrap_or_else(|| spec.hbar.clone());
    let field = s.field()?;
    let tol = Tolerances::default();
    let builder = |hbar: f64| -> fw_core::Result<ProbeInput> {
        let params = s.params().with_hbar(hbar);
        let scheme = s.scheme(hbar).map_err(|e| fw_core::FwError::InvalidParameter(e.to_string()))?;
        let r = realize_checked(&field, &params, &scheme)?;
        Ok(ProbeInput {
            split: split_from(s.hamiltonian, &r, &params, &tol)?,
            projector: projector(s, &r),
            validity: Some(validity_at(s, &field, &params)),
        })
    };
    let popts = ProbeOptions {
        fw: FwOptions {
            tol,
            path: s.transform.path_choice(),
        },
        with_eriksen: spec.eriksen,
        jobs: opts.jobs,
        ..ProbeOptions::default()
    };
    let rep = hbar_scaling_probe(builder, &hbars, &popts)?;
    if let Some(dir) = out {
        let rows = rep.points.iter().map(|p| {
            vec![
                p.hbar,
                p.o_prime_norm,
                p.odd_h_fw_norm,
                p.eriksen_deviation.unwrap_or(f64::NAN),
                p.h_fw_norm,
                p.unitarity_defect,
                p.conjugation_defect,
            ]
        });
        write_csv(
            &dir.join("probe.csv"),
            &[
                "hbar",
                "o_prime_norm",
                "odd_h_fw_norm",
                "eriksen_deviation",
                "h_fw_norm",
                "unitarity_defect",
                "conjugation_defect",
            ],
            rows,
        )?;
    }
    Ok((to_value(&rep), true))
}

/// H = βM + E + O with M, E, O functions of one odd generator G = [[0, X], [±X†, 0]].
/// The plus sign gives a hermitian H, the minus sign a pseudo-hermitian one.
pub fn commuting_triple(rng: &mut impl Rng, spinor_rank: usize, n: usize, hermitian: bool) -> fw_core::Result<SplitHamiltonian> {
    let space = Space::new(spinor_rank, n, BasisTag::new("random"))?;
    let half = space.half();
    let mut x = DMatrix::from_fn(half, half, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    x *= Complex::new(0.6 / x.norm(), 0.0);
    let sign = if hermitian { 1.0 } else { -1.0 };
    let mut g = CMatrix::zeros(space.dim(), space.dim());
    g.view_mut((0, half), (half, half)).copy_from(&x);
    g.view_mut((half, 0), (half, half)).copy_from(&(x.adjoint() * Complex::new(sign, 0.0)));
    let g = space.operator(g)?;
    let g2 = &g * &g;
    // sign·G² is positive semidefinite in both cases.
    let pos = g2.scale_re(sign);
    let (m0, a, b, c) = (rng.gen_range(0.8..1.5), rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let mass = &space.identity().scale_re(m0) + &pos.scale_re(a);
    let even = &pos.scale_re(b) + &(&pos * &pos).scale_re(c);
    SplitHamiltonian::new(mass, even, g, &Tolerances::default())
}

#[derive(Serialize)]
struct CheckRow {
    hermitian: bool,
    dim: usize,
    odd_residual: f64,
    closed_form_defect: f64,
    unitarity_defect: f64,
    general_vs_exact: f64,
    eriksen_vs_exact: f64,
}

fn check(s: &Scenario, opts: &RunOptions, out: Option<&Path>) -> Result<(Value, bool), CliError> {
    let spec = s.check.as_ref().expect("validated");
    let seed = opts.seed.unwrap_or(s.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Tolerances::default();
    let rank = s.hamiltonian.spinor_rank();
    let mut rows = Vec::with_capacity(spec.samples);
    for k in 0..spec.samples {
        let hermitian = k % 2 == 0;
        let split = commuting_triple(&mut rng, rank, spec.dim, hermitian)?;
        let ex = exact_fw(&split, &tol)?;
        let gen = general_fw(&split, &FwOptions { tol, path: Default::default() })?;
        let er = oracle::eriksen_fw(&split.hamiltonian(), &tol)?;
        rows.push(CheckRow {
            hermitian,
            dim: split.space().dim(),
            odd_residual: ex.residual_odd_norm,
            closed_form_defect: ex.closed_form_defect(&split.even),
            unitarity_defect: ex.unitarity_defect,
            general_vs_exact: gen.h_fw.rel_diff(&ex.h_fw),
            eriksen_vs_exact: er.h_diag.rel_diff(&ex.h_fw),
        });
    }
    let max = |f: fn(&CheckRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let worst = json!({
        "odd_residual": max(|r| r.odd_residual),
        "closed_form_defect": max(|r| r.closed_form_defect),
        "unitarity_defect": max(|r| r.unitarity_defect),
        "general_vs_exact": max(|r| r.general_vs_exact),
        "eriksen_vs_exact": max(|r| r.eriksen_vs_exact),
    });
    let threshold = opts.tolerance.unwrap_or(1e-10);
    let passed = worst
        .as_object()
        .map(|m| m.values().all(|v| v.as_f64().is_some_and(|x| x <= threshold)))
        .unwrap_or(false);
    if let Some(dir) = out {
        let csv_rows = rows.iter().map(|r| {
            vec![
                if r.hermitian { 1.0 } else { 0.0 },
                r.dim as f64,
                r.odd_residual,
                r.closed_form_defect,
                r.unitarity_defect,
                r.general_vs_exact,
                r.eriksen_vs_exact,
            ]
        });
        write_csv(
            &dir.join("check.csv"),
            &[
                "hermitian",
                "dim",
                "odd_residual",
                "closed_form_defect",
                "unitarity_defect",
                "general_vs_exact",
                "eriksen_vs_exact",
            ],
            csv_rows,
        )?;
    }
    Ok((
        json!({
            "seed": seed,
            "samples": rows,
            "worst": worst,
            "tolerance": threshold,
        }),
        passed,
    ))
}

/// Loads the field, checks E = −∇Φ and H = ∇×A at the default points and at the
/// points the discretization samples, and checks the task sections.
pub fn validate(s: &Scenario) -> Result<String, CliError> {
    if let Some(t) = s.task {
        s.validate_for(t)?;
    }
    let params = s.params();
    let field = s.field()?;
    let mut report = field.check_consistency(&field.default_check_points(), FIELD_CONSISTENCY_TOL)?;
    let mut points = report.points;
    if s.discretization.is_some() {
        let r = s.scheme(params.hbar)?.realize(&field, &params)?;
        let on_grid = field.check_consistency(&r.sample_points, FIELD_CONSISTENCY_TOL)?;
        points += on_grid.points;
        if on_grid.max_deviation > report.max_deviation {
            report = on_grid;
        }
    }
    summary_json(&json!({
        "scenario": s.name,
        "valid": true,
        "field_consistency": {
            "max_deviation": report.max_deviation,
            "location": report.location,
            "points": points,
            "tolerance": FIELD_CONSISTENCY_TOL,
        },
        "validity": validity_at(s, &field, &params),
    }))
}
