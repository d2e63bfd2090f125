//! Concrete Hamiltonians: Dirac–Pauli with anomalous magnetic and electric dipole
//! moments, Feshbach–Villars for spin 0, and the analytic FW forms used as references.

pub mod fields;
pub mod matrices;
pub mod params;
pub mod scheme;

use crate::algebra::{commutator, BlockOperator, Space, Tolerances};
use crate::error::Result;
use crate::linalg::{self, re, CMatrix, HermitianEigen, C64, I};
use crate::transform::SplitHamiltonian;

pub use fields::{FieldConfiguration, FieldGradients, FieldSample, SampledField, V3};
pub use params::ParticleParams;
pub use scheme::{DiscretizationScheme, Observables, PeriodicGrid, Realization};

/// Relative tolerance for E = −∇Φ and H = ∇×A at the points a scheme samples.
pub const FIELD_CONSISTENCY_TOL: f64 = 1e-6;

/// Realizes the scheme and checks the fields against the potentials at its sample points.
pub fn realize_checked(
    field: &FieldConfiguration,
    params: &ParticleParams,
    scheme: &DiscretizationScheme,
) -> Result<Realization> {
    let r = scheme.realize(field, params)?;
    field.check_consistency(&r.sample_points, FIELD_CONSISTENCY_TOL)?;
    Ok(r)
}

/// Σ_i spin_i ⊗ spatial_i
fn spin_dot(space: &Space, spin: &[CMatrix; 3], spatial: &[CMatrix; 3]) -> Result<BlockOperator> {
    let mut acc = space.zeros();
    for i in 0..3 {
        if spatial[i].iter().all(|z| *z == linalg::ZERO) {
            continue;
        }
        acc = &acc + &space.kron(&spin[i], &spatial[i])?;
    }
    Ok(acc)
}

/// M = mc², E = eΦ − μ′Π·H − dΠ·E, O = cα·π + iμ′γ·E − idγ·H.
pub fn build_dirac_pauli(
    field: &FieldConfiguration,
    params: &ParticleParams,
    scheme: &DiscretizationScheme,
    tol: &Tolerances,
) -> Result<SplitHamiltonian> {
    let r = realize_checked(field, params, scheme)?;
    dirac_pauli_from(&r, params, tol)
}

pub fn dirac_pauli_from(r: &Realization, params: &ParticleParams, tol: &Tolerances) -> Result<SplitHamiltonian> {
    let space = r.space(4)?;
    let (mu, d) = (params.mu_anomalous(), params.edm());
    let pol = matrices::polarization();
    let gam = matrices::gamma();
    let mass = space.scalar(re(params.rest_energy()));
    let even = &(&space.lift(&r.phi)?.scale_re(params.charge) - &spin_dot(&space, &pol, &r.h)?.scale_re(mu))
        - &spin_dot(&space, &pol, &r.e)?.scale_re(d);
    let odd = &(&spin_dot(&space, &matrices::alpha(), &r.pi)?.scale_re(params.c)
        + &spin_dot(&space, &gam, &r.e)?.scale(I * mu))
        - &spin_dot(&space, &gam, &r.h)?.scale(I * d);
    SplitHamiltonian::new(mass, even, odd, tol)
}

/// M = mc² + π²/2m, E = eΦ, O = iρ₂π²/2m.
pub fn build_feshbach_villars(
    field: &FieldConfiguration,
    params: &ParticleParams,
    scheme: &DiscretizationScheme,
    tol: &Tolerances,
) -> Result<SplitHamiltonian> {
    let r = realize_checked(field, params, scheme)?;
    feshbach_villars_from(&r, params, tol)
}

pub fn feshbach_villars_from(r: &Realization, params: &ParticleParams, tol: &Tolerances) -> Result<SplitHamiltonian> {
    let space = r.space(2)?;
    let kinetic = r.pi_squared() * re(0.5 / params.mass);
    let mass = &space.scalar(re(params.rest_energy())) + &space.lift(&kinetic)?;
    let even = space.lift(&r.phi)?.scale_re(params.charge);
    let odd = space.kron(&matrices::i_rho2(), &kinetic)?;
    SplitHamiltonian::new(mass, even, odd, tol)
}

/// Spatial functions of π² built from one eigendecomposition.
struct Dispersion {
    eps: CMatrix,
    eps_inv: CMatrix,
    /// 1/√(2ε′(ε′ + mc²))
    n_inv: CMatrix,
}

impl Dispersion {
    fn new(r: &Realization, params: &ParticleParams) -> Result<Self> {
        let e = HermitianEigen::new(&r.pi_squared());
        if e.values.min() < -1e-12 * e.max_abs().max(1.0) {
            return Err(crate::error::FwError::SingularSqrt("π² has a negative eigenvalue".into()));
        }
        let mc2 = params.rest_energy();
        let eps = |p2: f64| params.energy(p2.max(0.0));
        Ok(Self {
            eps: e.map(eps),
            eps_inv: e.map(|p2| 1.0 / eps(p2)),
            n_inv: e.map(|p2| 1.0 / (2.0 * eps(p2) * (eps(p2) + mc2)).sqrt()),
        })
    }
}

/// Named terms of the analytic spin-1/2 FW Hamiltonian; `total` is their sum.
#[derive(Clone, Debug)]
pub struct AnalyticFw {
    pub terms: Vec<(&'static str, BlockOperator)>,
    pub total: BlockOperator,
}

impl AnalyticFw {
    pub fn term(&self, name: &str) -> Option<&BlockOperator> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }
}

/// Operator cross product (a×b)_i = ε_ijk a_j b_k, keeping the operator order.
fn cross(a: &[CMatrix; 3], b: &[CMatrix; 3]) -> [CMatrix; 3] {
    let m = linalg::matmul;
    [
        m(&a[1], &b[2]) - m(&a[2], &b[1]),
        m(&a[2], &b[0]) - m(&a[0], &b[2]),
        m(&a[0], &b[1]) - m(&a[1], &b[0]),
    ]
}

fn sym_dot(a: &[CMatrix; 3], b: &[CMatrix; 3]) -> CMatrix {
    let mut acc = CMatrix::zeros(a[0].nrows(), a[0].ncols());
    for i in 0..3 {
        acc += linalg::matmul(&a[i], &b[i]) + linalg::matmul(&b[i], &a[i]);
    }
    acc
}

/// The spin-1/2 FW Hamiltonian to first order in ħ, terms linear in field strengths:
///
/// ```text
/// βε′ + eΦ − μ′Π·H − (μ₀/2){mc²/ε′, Π·H} + (μ′c/4){1/ε′, Σ·(π×E) − Σ·(E×π)}
///   + μ₀mc³ N⁻¹ (Σ·(π×E) − Σ·(E×π)) N⁻¹ + (μ′c²/2) N⁻¹{Π·π, H·π + π·H} N⁻¹
///   − dΠ·E + (dc²/2) N⁻¹{Π·π, E·π + π·E} N⁻¹ − (dc/4){1/ε′, Σ·(π×H) − Σ·(H×π)}
/// ```
///
/// with ε′ = √(m²c⁴ + c²π²) and N = √(2ε′(ε′ + mc²)).
pub fn eval_fw_spin_half_analytic(
    field: &FieldConfiguration,
    params: &ParticleParams,
    scheme: &DiscretizationScheme,
) -> Result<AnalyticFw> {
    let r = realize_checked(field, params, scheme)?;
    spin_half_analytic_from(&r, params)
}

pub fn spin_half_analytic_from(r: &Realization, params: &ParticleParams) -> Result<AnalyticFw> {
    let space = r.space(4)?;
    let disp = Dispersion::new(r, params)?;
    let (c, m, mc2) = (params.c, params.mass, params.rest_energy());
    let (mu0, mu, d) = (params.mu0(), params.mu_anomalous(), params.edm());
    let pol = matrices::polarization();
    let sig = matrices::sigma();
    let lift = |x: &CMatrix| space.lift(x);
    let anti = |a: &BlockOperator, b: &BlockOperator| &(a * b) + &(b * a);

    let eps_inv = lift(&disp.eps_inv)?;
    let n_inv = lift(&disp.n_inv)?;
    let sandwich_n = |x: &BlockOperator| &(&n_inv * x) * &n_inv;
    let pi_h = spin_dot(&space, &pol, &r.h)?;
    let pi_e = spin_dot(&space, &pol, &r.e)?;
    let pol_pi = spin_dot(&space, &pol, &r.pi)?;
    let l_e = &spin_dot(&space, &sig, &cross(&r.pi, &r.e))? - &spin_dot(&space, &sig, &cross(&r.e, &r.pi))?;
    let l_h = &spin_dot(&space, &sig, &cross(&r.pi, &r.h))? - &spin_dot(&space, &sig, &cross(&r.h, &r.pi))?;
    let h_pi = lift(&sym_dot(&r.h, &r.pi))?;
    let e_pi = lift(&sym_dot(&r.e, &r.pi))?;

    let terms: Vec<(&'static str, BlockOperator)> = vec![
        ("rest-kinetic", space.kron(&matrices::beta(), &disp.eps)?),
        ("electrostatic", lift(&r.phi)?.scale_re(params.charge)),
        ("anomalous-magnetic", pi_h.scale_re(-mu)),
        ("dirac-magnetic", anti(&eps_inv.scale_re(mc2), &pi_h).scale_re(-0.5 * mu0)),
        ("anomalous-spin-orbit", anti(&eps_inv, &l_e).scale_re(0.25 * mu * c)),
        ("dirac-spin-orbit", sandwich_n(&l_e).scale_re(mu0 * m * c * c * c)),
        ("anomalous-helicity", sandwich_n(&anti(&pol_pi, &h_pi)).scale_re(0.5 * mu * c * c)),
        ("edm-electric", pi_e.scale_re(-d)),
        ("edm-helicity", sandwich_n(&anti(&pol_pi, &e_pi)).scale_re(0.5 * d * c * c)),
        ("edm-motional", anti(&eps_inv, &l_h).scale_re(-0.25 * d * c)),
    ];
    let total = terms.iter().fold(space.zeros(), |acc, (_, t)| &acc + t);
    Ok(AnalyticFw { terms, total })
}

/// β√(m²c⁴ + c²π²) + eΦ on the two-component space.
pub fn eval_fw_spinless_analytic(
    field: &FieldConfiguration,
    params: &ParticleParams,
    scheme: &DiscretizationScheme,
) -> Result<BlockOperator> {
    let r = realize_checked(field, params, scheme)?;
    spinless_analytic_from(&r, params)
}

pub fn spinless_analytic_from(r: &Realization, params: &ParticleParams) -> Result<BlockOperator> {
    let space = r.space(2)?;
    let disp = Dispersion::new(r, params)?;
    Ok(&space.kron(&matrices::rho()[2], &disp.eps)? + &space.lift(&r.phi)?.scale_re(params.charge))
}

/// (i/ħ)[H_FW, A], the Heisenberg rate of change of a time-independent observable.
pub fn heisenberg_rhs(h_fw: &BlockOperator, observable: &BlockOperator, params: &ParticleParams) -> Result<BlockOperator> {
    Ok(commutator(h_fw, observable)?.scale(C64::new(0.0, 1.0 / params.hbar)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(p: [f64; 3]) -> DiscretizationScheme {
        DiscretizationScheme::MomentumBlock { momentum: V3::from(p) }
    }

    #[test]
    fn zero_fields_give_free_dirac() {
        let params = ParticleParams::natural();
        let tol = Tolerances::default();
        let h = build_dirac_pauli(&FieldConfiguration::Zero, &params, &block([0.3, -0.2, 0.5]), &tol)
            .unwrap()
            .hamiltonian();
        let a = matrices::alpha();
        let expect = matrices::beta() + (&a[0] * re(0.3)) + (&a[1] * re(-0.2)) + (&a[2] * re(0.5));
        assert!(linalg::rel_diff(h.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn feshbach_villars_closed_form_block() {
        let params = ParticleParams::natural();
        let tol = Tolerances::default();
        let s = build_feshbach_villars(&FieldConfiguration::Zero, &params, &block([0.6, 0.0, 0.0]), &tol).unwrap();
        // M = 1 + 0.18, O = iρ₂·0.18
        assert!((s.mass.matrix()[(0, 0)].re - 1.18).abs() < 1e-15);
        assert!((s.odd.matrix()[(0, 1)].re - 0.18).abs() < 1e-15);
        assert!((s.odd.matrix()[(1, 0)].re + 0.18).abs() < 1e-15);
        let h = s.hamiltonian();
        assert!(h.is_pseudo_hermitian(1e-14));
        assert!(!h.is_hermitian(1e-10));
    }

    #[test]
    fn rest_frame_form_in_uniform_magnetic_field() {
        // At π = 0 only βmc² − (μ₀ + μ′)Π·H survives.
        let params = ParticleParams::new(1.0, 1.0, 2.6, 0.0, 1.0, 0.1).unwrap();
        let field = FieldConfiguration::uniform([0.0; 3], [0.0, 0.0, 0.7]);
        let fw = eval_fw_spin_half_analytic(&field, &params, &block([0.0; 3])).unwrap();
        let pol = matrices::polarization();
        let expect = matrices::beta() - &pol[2] * re((params.mu0() + params.mu_anomalous()) * 0.7);
        assert!(linalg::rel_diff(fw.total.matrix(), &expect) < 1e-14);
        for name in ["anomalous-spin-orbit", "dirac-spin-orbit", "anomalous-helicity", "edm-electric"] {
            assert!(fw.term(name).unwrap().norm() < 1e-15, "{name}");
        }
    }
}
