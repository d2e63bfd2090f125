//! Exact and general transformation paths against direct matrix arithmetic.

use fw_core::algebra::{BasisTag, Space, Tolerances};
use fw_core::hamiltonians::{build_dirac_pauli, build_feshbach_villars, matrices, DiscretizationScheme, FieldConfiguration, ParticleParams, V3};
use fw_core::linalg::{self, CMatrix, C64};
use fw_core::oracle::eriksen_fw;
use fw_core::transform::{
    exact_fw, final_fw, first_stage, general_fw, resplit, FwOptions, HermiticityClass, PathChoice, SplitHamiltonian, TimeDependence, TransformPath,
};
use fw_core::FwError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// M, E, O functions of an odd G; hermitian or pseudo-hermitian by the sign of the lower block.
fn commuting(rng: &mut impl Rng, rank: usize, n: usize, hermitian: bool) -> SplitHamiltonian {
    let sp = Space::new(rank, n, BasisTag::new("t")).unwrap();
    let h = sp.half();
    let mut x = random_matrix(rng, h);
    x *= C64::new(0.5 / x.norm(), 0.0);
    let s = if hermitian { 1.0 } else { -1.0 };
    let mut g = CMatrix::zeros(sp.dim(), sp.dim());
    g.view_mut((0, h), (h, h)).copy_from(&x);
    g.view_mut((h, 0), (h, h)).copy_from(&(x.adjoint() * C64::new(s, 0.0)));
    let g = sp.operator(g).unwrap();
    let pos = (&g * &g).scale_re(s);
    let mass = &sp.identity().scale_re(rng.gen_range(0.8..1.4)) + &pos.scale_re(rng.gen_range(0.0..1.0));
    let even = &pos.scale_re(rng.gen_range(-0.5..0.5)) + &(&pos * &pos).scale_re(0.2);
    SplitHamiltonian::new(mass, even, g, &Tolerances::default()).unwrap()
}

fn free_block(p: [f64; 3], params: &ParticleParams) -> SplitHamiltonian {
    build_dirac_pauli(
        &FieldConfiguration::Zero,
        params,
        &DiscretizationScheme::MomentumBlock { momentum: V3::from(p) },
        &Tolerances::default(),
    )
    .unwrap()
}

#[test]
fn exact_path_block_diagonalizes_commuting_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = Tolerances::default();
    for k in 0..12 {
        let split = commuting(&mut rng, if k % 3 == 0 { 2 } else { 4 }, 1 + k % 4, k % 2 == 0);
        let res = exact_fw(&split, &tol).unwrap();
        assert!(res.residual_odd_norm <= 1e-12, "odd residual {}", res.residual_odd_norm);
        assert!(res.closed_form_defect(&split.even) <= 1e-12);
        assert!(res.unitarity_defect <= 1e-12);
        let er = eriksen_fw(&split.hamiltonian(), &tol).unwrap();
        assert!(er.h_diag.rel_diff(&res.h_fw) <= 1e-10);
    }
}

#[test]
fn pseudo_hermitian_triples_are_classified_and_pseudo_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let split = commuting(&mut rng, 4, 3, false);
    let tol = Tolerances::default();
    assert_eq!(split.class(&tol), HermiticityClass::PseudoHermitian);
    let res = exact_fw(&split, &tol).unwrap();
    let beta = split.space().beta();
    let defect = (&(&(&beta * &res.u.adjoint()) * &beta) * &res.u - split.space().identity()).norm();
    assert!(defect <= 1e-12, "{defect}");
}

#[test]
fn exact_path_refuses_non_commuting_input() {
    let params = ParticleParams::natural();
    let split = build_feshbach_villars(
        &FieldConfiguration::GaussianWell { depth: 0.2, width: 2.0, center: 0.0 },
        &params,
        &DiscretizationScheme::PeriodicGrid(fw_core::hamiltonians::PeriodicGrid::with_momentum_window(16, 1.0, 1.0, 1.0)),
        &Tolerances::default(),
    )
    .unwrap();
    assert!(matches!(exact_fw(&split, &Tolerances::default()), Err(FwError::NotExactCase(_))));
}

#[test]
fn free_particle_closed_form_on_all_paths() {
    let params = ParticleParams::new(1.7, -1.0, 2.0, 0.0, 2.0, 1.0).unwrap();
    let tol = Tolerances::default();
    for p in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [4.0, 1.0, -2.0]] {
        let split = free_block(p, &params);
        let eps = (params.rest_energy().powi(2) + params.c.powi(2) * p.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let expect = split.space().beta().scale_re(eps);
        let g = general_fw(&split, &FwOptions::default()).unwrap();
        let e = exact_fw(&split, &tol).unwrap();
        let o = eriksen_fw(&split.hamiltonian(), &tol).unwrap();
        for h in [&g.h_fw, &e.h_fw, &o.h_diag] {
            assert!(h.rel_diff(&expect) <= 1e-13, "{}", h.rel_diff(&expect));
        }
    }
}

/// 8×8 H with [M, O] ≠ 0: β is 4×4 blocks of ±1, M a hermitian positive even
/// operator, E even hermitian, O odd hermitian.
fn non_commuting(rng: &mut impl Rng) -> SplitHamiltonian {
    let sp = Space::new(2, 4, BasisTag::new("t")).unwrap();
    let herm = |rng: &mut ChaCha8Rng| {
        let a = random_matrix(rng, 8);
        sp.operator(linalg::hermitian_part(&a)).unwrap()
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    let a = herm(&mut r).even();
    let mass = &sp.identity().scale_re(3.0) + &(&a * &a).scale_re(0.2);
    let even = herm(&mut r).even().scale_re(0.3);
    let odd = herm(&mut r).odd().scale_re(0.6);
    SplitHamiltonian::new(mass, even, odd, &Tolerances::default()).unwrap()
}

#[test]
fn full_path_equals_explicit_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let split = non_commuting(&mut rng);
        let opts = FwOptions {
            path: PathChoice::Auto,
            ..FwOptions::default()
        };
        let stage = first_stage(&split, &opts).unwrap();
        assert_eq!(stage.diagnostics.path, TransformPath::Full);
        // U assembled directly as X (X²)^(−1/2) β, conjugating H.
        let beta = split.space().beta();
        let x = &(&beta * &(&stage.epsilon + &split.mass)) - &split.odd;
        let x2 = &x * &x;
        let t = fw_core::algebra::operator_sqrt(&x2, &Tolerances::default()).unwrap();
        let u = &t.inv_right(&x) * &beta;
        // T is a function of X², so X⁻¹ = X T⁻² and U⁻¹ = β X T⁻¹.
        let u_inv = &beta * &t.inv_right(&x);
        let direct = &(&u * &split.hamiltonian()) * &u_inv;
        assert!(stage.h_prime.rel_diff(&direct) <= 1e-10, "{}", stage.h_prime.rel_diff(&direct));
        assert!((&u * &u_inv).rel_diff(&split.space().identity()) <= 1e-12);
    }
}

#[test]
fn reduced_path_agrees_with_full_path_when_mass_commutes() {
    let params = ParticleParams::natural();
    let split = build_feshbach_villars(
        &FieldConfiguration::GaussianWell { depth: 0.2, width: 3.0, center: 0.0 },
        &params.with_hbar(0.1),
        &DiscretizationScheme::PeriodicGrid(fw_core::hamiltonians::PeriodicGrid::with_momentum_window(32, 1.5, 0.4, 0.1)),
        &Tolerances::default(),
    )
    .unwrap();
    let reduced = general_fw(&split, &FwOptions { path: PathChoice::Reduced, ..FwOptions::default() }).unwrap();
    let full = general_fw(&split, &FwOptions { path: PathChoice::Full, ..FwOptions::default() }).unwrap();
    assert!(reduced.h_prime.rel_diff(&full.h_prime) <= 1e-12);
    assert!(reduced.conjugation_defect <= 1e-12);
}

#[test]
fn final_hamiltonian_is_even_and_resplit_recombines() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let split = non_commuting(&mut rng);
    let stage = first_stage(&split, &FwOptions::default()).unwrap();
    let (e1, o1) = resplit(&stage.h_prime, &stage.epsilon).unwrap();
    assert!(e1.is_even(1e-14) && o1.is_odd(1e-14));
    let back = &(&stage.epsilon.beta_left() + &e1) + &o1;
    assert!(back.rel_diff(&stage.h_prime) <= 1e-14);
    let h = final_fw(&stage.epsilon, &e1, &o1, &Tolerances::default()).unwrap();
    assert!(h.is_even(1e-14));
    // ¼β{O′², ε⁻¹} computed with explicit inverses.
    let eps_inv = split.space().operator(stage.epsilon.matrix().clone().try_inverse().unwrap()).unwrap();
    let o2 = &o1 * &o1;
    let corr = (&(&o2 * &eps_inv) + &(&eps_inv * &o2)).beta_left().scale_re(0.25);
    let expect = &(&stage.epsilon.beta_left() + &e1) + &corr;
    assert!(h.rel_diff(&expect) <= 1e-12);
}

#[test]
fn time_dependent_input_is_unsupported() {
    let mut split = free_block([0.1, 0.0, 0.0], &ParticleParams::natural());
    split.time_dependence = TimeDependence::TimeDependent;
    assert!(matches!(general_fw(&split, &FwOptions::default()), Err(FwError::Unsupported(_))));
    assert!(matches!(exact_fw(&split, &Tolerances::default()), Err(FwError::Unsupported(_))));
}

#[test]
fn grading_violations_are_rejected() {
    let sp = Space::new(4, 1, BasisTag::new("t")).unwrap();
    let alpha = sp.operator(matrices::alpha()[0].clone()).unwrap();
    let r = SplitHamiltonian::new(alpha.clone(), sp.zeros(), alpha.clone(), &Tolerances::default());
    assert!(matches!(r, Err(FwError::InvalidBasis(_))));
    let r = SplitHamiltonian::new(sp.identity(), sp.zeros(), sp.identity(), &Tolerances::default());
    assert!(matches!(r, Err(FwError::InvalidBasis(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn general_path_conjugation_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let split = non_commuting(&mut rng);
        let res = general_fw(&split, &FwOptions::default()).unwrap();
        prop_assert!(res.conjugation_defect <= 1e-10);
        prop_assert!(res.unitarity_defect <= 1e-10);
    }

    #[test]
    fn exact_and_general_agree_on_commuting_input(seed in any::<u64>(), herm in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let split = commuting(&mut rng, 4, 2, herm);
        let e = exact_fw(&split, &Tolerances::default()).unwrap();
        let g = general_fw(&split, &FwOptions::default()).unwrap();
        prop_assert!(g.h_fw.rel_diff(&e.h_fw) <= 1e-10);
        prop_assert!(g.o_prime.norm() <= 1e-10 * (1.0 + split.hamiltonian().norm()));
    }

    #[test]
    fn free_blocks_match_eriksen(px in -3.0f64..3.0, py in -3.0f64..3.0, pz in -3.0f64..3.0) {
        let split = free_block([px, py, pz], &ParticleParams::natural());
        let g = general_fw(&split, &FwOptions::default()).unwrap();
        let o = eriksen_fw(&split.hamiltonian(), &Tolerances::default()).unwrap();
        prop_assert!(g.h_fw.rel_diff(&o.h_diag) <= 1e-12);
    }
}
