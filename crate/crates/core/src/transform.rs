//! Foldy–Wouthuysen transformation: the commuting (exact) case, the general
//! strong-field operator U, the stationary transformed Hamiltonian H′, the even/odd
//! resplit and the final block-diagonal Hamiltonian.

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{anticommutator, commutator, operator_sqrt, BlockOperator, Space, Tolerances};
use crate::error::{FwError, Result};
use crate::linalg::{CMatrix, Factorization};
use crate::oracle;
use crate::semiclassical::ValidityReport;

/// Time dependence of the external fields. Only the stationary case (F = E) is
/// evaluated numerically; F = E − iħ∂/∂t would need a spacetime basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TimeDependence {
    Stationary,
    TimeDependent,
}

/// H = βM + E + O with the three parts supplied separately.
#[derive(Clone, Debug)]
pub struct SplitHamiltonian {
    pub mass: BlockOperator,
    pub even: BlockOperator,
    pub odd: BlockOperator,
    pub time_dependence: TimeDependence,
}

impl SplitHamiltonian {
    /// Checks that the three parts share a space and carry the right grading.
    pub fn new(mass: BlockOperator, even: BlockOperator, odd: BlockOperator, tol: &Tolerances) -> Result<Self> {
        mass.check_same_space(&even)?;
        mass.check_same_space(&odd)?;
        for (name, op) in [("M", &mass), ("E", &even)] {
            if !op.is_even(tol.grading) {
                return Err(FwError::InvalidBasis(format!(
                    "{name} is not even (odd fraction {:.3e})",
                    op.odd_fraction()
                )));
            }
        }
        if !odd.is_odd(tol.grading) {
            return Err(FwError::InvalidBasis(format!(
                "O is not odd (even fraction {:.3e})",
                odd.even_fraction()
            )));
        }
        Ok(Self {
            mass,
            even,
            odd,
            time_dependence: TimeDependence::Stationary,
        })
    }

    pub fn space(&self) -> &Space {
        self.mass.space()
    }

    pub fn beta(&self) -> BlockOperator {
        self.space().beta()
    }

    /// βM + E + O
    pub fn hamiltonian(&self) -> BlockOperator {
        &(&self.mass.beta_left() + &self.even) + &self.odd
    }

    pub fn class(&self, tol: &Tolerances) -> HermiticityClass {
        HermiticityClass::of(&self.hamiltonian(), tol.hermiticity)
    }

    fn require_stationary(&self) -> Result<()> {
        match self.time_dependence {
            TimeDependence::Stationary => Ok(()),
            TimeDependence::TimeDependent => Err(FwError::Unsupported(
                "time-dependent fields are not evaluated numerically".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HermiticityClass {
    Hermitian,
    PseudoHermitian,
    Neither,
}

impl HermiticityClass {
    pub fn of(h: &BlockOperator, tol: f64) -> Self {
        if h.is_hermitian(tol) {
            HermiticityClass::Hermitian
        } else if h.is_pseudo_hermitian(tol) {
            HermiticityClass::PseudoHermitian
        } else {
            HermiticityClass::Neither
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformPath {
    /// Commuting case: U = (ε + M + βO)/√(2ε(ε+M)).
    Exact,
    /// General operator with [M, O] = 0.
    Reduced,
    /// General operator, all terms.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PathChoice {
    #[default]
    Auto,
    Reduced,
    Full,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FwOptions {
    pub tol: Tolerances,
    pub path: PathChoice,
}

#[derive(Clone, Debug)]
pub struct FwResult {
    pub u: BlockOperator,
    pub u_inv: BlockOperator,
    pub h_fw: BlockOperator,
    pub h_prime: BlockOperator,
    pub e_prime: BlockOperator,
    pub o_prime: BlockOperator,
    pub epsilon: BlockOperator,
    /// ‖odd(H_fw)‖/‖H_fw‖
    pub residual_odd_norm: f64,
    /// ‖U†U − 1‖ for hermitian input, ‖βU†βU − 1‖ for pseudo-hermitian input,
    /// ‖U U⁻¹ − 1‖ otherwise.
    pub unitarity_defect: f64,
    /// ‖U H U⁻¹ − H′‖/‖H′‖ with the product formed explicitly.
    pub conjugation_defect: f64,
    pub class: HermiticityClass,
    pub path: TransformPath,
}

impl FwResult {
    /// ‖H_fw − (βε + E)‖/‖βε + E‖ for a given even part E.
    pub fn closed_form_defect(&self, even: &BlockOperator) -> f64 {
        let closed = &self.epsilon.beta_left() + even;
        self.h_fw.rel_diff(&closed)
    }
}

fn commute_within(a: &BlockOperator, b: &BlockOperator, tol: f64) -> Result<(bool, f64)> {
    let c = commutator(a, b)?.norm();
    let scale = a.norm() * b.norm();
    Ok((c <= tol * scale, if scale == 0.0 { 0.0 } else { c / scale }))
}

fn unitarity_defect(u: &BlockOperator, u_inv: &BlockOperator, class: HermiticityClass) -> f64 {
    let id = u.space().identity();
    let prod = match class {
        HermiticityClass::Hermitian => &u.adjoint() * u,
        HermiticityClass::PseudoHermitian => &u.pseudo_adjoint() * u,
        HermiticityClass::Neither => u * u_inv,
    };
    (&prod - &id).norm()
}

/// ε = √(M² + O²)
fn epsilon(split: &SplitHamiltonian, tol: &Tolerances) -> Result<(BlockOperator, Factorization)> {
    let m2 = &split.mass * &split.mass;
    let o2 = &split.odd * &split.odd;
    let root = operator_sqrt(&(&m2 + &o2), tol)?;
    Ok((root.root, root.factor))
}

/// Commuting case, [E, O] = [M, O] = 0: U = (ε + M + βO)/√(2ε(ε+M)), H_fw = βε + E.
/// `h_fw` is U H U⁻¹ formed explicitly, so its distance from βε + E measures the theorem.
pub fn exact_fw(split: &SplitHamiltonian, tol: &Tolerances) -> Result<FwResult> {
    split.require_stationary()?;
    let (ok_e, rel_e) = commute_within(&split.even, &split.odd, tol.commutation)?;
    let (ok_m, rel_m) = commute_within(&split.mass, &split.odd, tol.commutation)?;
    if !ok_e || !ok_m {
        return Err(FwError::NotExactCase(format!(
            "relative commutators [E,O] = {rel_e:.3e}, [M,O] = {rel_m:.3e} exceed {:.1e}",
            tol.commutation
        )));
    }
    let h = split.hamiltonian();
    let class = HermiticityClass::of(&h, tol.hermiticity);
    let (eps, _) = epsilon(split, tol)?;
    let w = &eps + &split.mass;
    let t = operator_sqrt(&(&eps * &w).scale_re(2.0), tol)?;
    let beta_o = split.odd.beta_left();
    let u = t.inv_left(&(&w + &beta_o));
    let u_inv = t.inv_right(&(&w - &beta_o));
    let h_prime = &(&u * &h) * &u_inv;
    let parts = h_prime.grade_split();
    let e_prime = &parts.even - &eps.beta_left();
    let residual_odd_norm = h_prime.odd_fraction();
    let unitarity = unitarity_defect(&u, &u_inv, class);
    Ok(FwResult {
        h_fw: h_prime.clone(),
        conjugation_defect: 0.0,
        h_prime,
        e_prime,
        o_prime: parts.odd,
        epsilon: eps,
        residual_odd_norm,
        unitarity_defect: unitarity,
        u,
        u_inv,
        class,
        path: TransformPath::Exact,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StepDiagnostics {
    pub path: TransformPath,
    /// ‖[M, O]‖/(‖M‖‖O‖)
    pub mass_odd_commutator: f64,
    /// ‖[E, O]‖/(‖E‖‖O‖)
    pub even_odd_commutator: f64,
}

/// First stage of the general transformation, keeping U and the roots it was built from.
#[derive(Clone, Debug)]
pub struct FirstStage {
    pub h_prime: BlockOperator,
    pub u: BlockOperator,
    pub u_inv: BlockOperator,
    pub epsilon: BlockOperator,
    pub epsilon_factor: Factorization,
    pub diagnostics: StepDiagnostics,
}

/// U = X T⁻¹ β with X = βε + βM − O and T = √(X²); then
/// H′ = βε + E + (1/(2T)) S (1/T) with the nested commutator sum S. When [M, O] = 0 the
/// terms containing [M, O] vanish and βε drops out of [T, [T, ·]].
pub fn first_stage(split: &SplitHamiltonian, opts: &FwOptions) -> Result<FirstStage> {
    split.require_stationary()?;
    let tol = &opts.tol;
    let (m, e, o) = (&split.mass, &split.even, &split.odd);
    let (mo_ok, mo_rel) = commute_within(m, o, tol.commutation)?;
    let (_, eo_rel) = commute_within(e, o, tol.commutation)?;
    let path = match opts.path {
        PathChoice::Auto if mo_ok => TransformPath::Reduced,
        PathChoice::Auto => TransformPath::Full,
        PathChoice::Reduced => TransformPath::Reduced,
        PathChoice::Full => TransformPath::Full,
    };

    let (eps, epsilon_factor) = epsilon(split, tol)?;
    let beta_eps = eps.beta_left();
    let w = &eps + m;
    let x = &w.beta_left() - o;
    let t = operator_sqrt(&(&x * &x), tol)?;

    let c = |a: &BlockOperator, b: &BlockOperator| commutator(a, b);
    let ac = |a: &BlockOperator, b: &BlockOperator| anticommutator(a, b);
    let we = c(&w, e)?;
    let oe = c(o, e)?;
    let mut s = &(&c(&t.root, &c(&t.root, e)?)? - &c(o, &oe)?) - &c(&w, &we)?;
    s = &s - &ac(o, &we)?.beta_left();
    s = &s + &ac(&w, &oe)?.beta_left();
    if path == TransformPath::Full {
        let mo = c(m, o)?;
        s = &s + &c(&t.root, &c(&t.root, &beta_eps)?)?;
        s = &s - &c(o, &mo)?.beta_left();
        s = &s - &c(&w, &mo)?;
    }
    let sandwich = t.inv_right(&t.inv_left(&s)).scale_re(0.5);
    let h_prime = &(&beta_eps + e) + &sandwich;

    let u = t.inv_right(&x).beta_right();
    let u_inv = t.inv_right(&x.beta_left());
    Ok(FirstStage {
        h_prime,
        u,
        u_inv,
        epsilon: eps,
        epsilon_factor,
        diagnostics: StepDiagnostics {
            path,
            mass_odd_commutator: mo_rel,
            even_odd_commutator: eo_rel,
        },
    })
}

/// H′ of the general transformation and how it was obtained.
pub fn general_fw_step(split: &SplitHamiltonian, opts: &FwOptions) -> Result<(BlockOperator, StepDiagnostics)> {
    let stage = first_stage(split, opts)?;
    Ok((stage.h_prime, stage.diagnostics))
}

/// E′ = ½(H′ + βH′β) − βε, O′ = ½(H′ − βH′β).
pub fn resplit(h_prime: &BlockOperator, epsilon: &BlockOperator) -> Result<(BlockOperator, BlockOperator)> {
    h_prime.check_same_space(epsilon)?;
    let parts = h_prime.grade_split();
    Ok((&parts.even - &epsilon.beta_left(), parts.odd))
}

/// H_FW = βε + E′ + ¼β{O′², 1/ε}
pub fn final_fw(epsilon: &BlockOperator, e_prime: &BlockOperator, o_prime: &BlockOperator, tol: &Tolerances) -> Result<BlockOperator> {
    let factor = epsilon.factorize(tol.hermiticity)?;
    final_fw_factored(epsilon, &factor, e_prime, o_prime)
}

fn final_fw_factored(
    epsilon: &BlockOperator,
    factor: &Factorization,
    e_prime: &BlockOperator,
    o_prime: &BlockOperator,
) -> Result<BlockOperator> {
    epsilon.check_same_space(e_prime)?;
    epsilon.check_same_space(o_prime)?;
    let o2 = o_prime * o_prime;
    let anti = &o2.apply_inverse_right(factor) + &o2.apply_inverse_left(factor);
    Ok(&(&epsilon.beta_left() + e_prime) + &anti.beta_left().scale_re(0.25))
}

/// Full general-path pipeline: first stage, resplit, final Hamiltonian.
pub fn general_fw(split: &SplitHamiltonian, opts: &FwOptions) -> Result<FwResult> {
    let h = split.hamiltonian();
    let class = HermiticityClass::of(&h, opts.tol.hermiticity);
    let stage = first_stage(split, opts)?;
    let (e_prime, o_prime) = resplit(&stage.h_prime, &stage.epsilon)?;
    let h_fw = final_fw_factored(&stage.epsilon, &stage.epsilon_factor, &e_prime, &o_prime)?;
    let conjugated = &(&stage.u * &h) * &stage.u_inv;
    let conjugation_defect = conjugated.rel_diff(&stage.h_prime);
    let unitarity = unitarity_defect(&stage.u, &stage.u_inv, class);
    Ok(FwResult {
        residual_odd_norm: h_fw.odd_fraction(),
        h_fw,
        h_prime: stage.h_prime,
        e_prime,
        o_prime,
        epsilon: stage.epsilon,
        unitarity_defect: unitarity,
        conjugation_defect,
        u: stage.u,
        u_inv: stage.u_inv,
        class,
        path: stage.diagnostics.path,
    })
}

/// A Hamiltonian realized at one value of ħ, with the spatial band on which norms are
/// measured and the semiclassical validity of that point.
#[derive(Clone, Debug)]
pub struct ProbeInput {
    pub split: SplitHamiltonian,
    pub projector: Option<CMatrix>,
    pub validity: Option<ValidityReport>,
}

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub fw: FwOptions,
    pub with_eriksen: bool,
    /// Norms below this fraction of ‖H_FW‖ count as round-off.
    pub round_off: f64,
    pub jobs: Option<usize>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            fw: FwOptions::default(),
            with_eriksen: true,
            round_off: 1e-11,
            jobs: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbePoint {
    pub hbar: f64,
    pub o_prime_norm: f64,
    pub odd_h_fw_norm: f64,
    /// Positive-energy block of H_FW against the Eriksen oracle.
    pub eriksen_deviation: Option<f64>,
    pub h_fw_norm: f64,
    pub unitarity_defect: f64,
    pub conjugation_defect: f64,
    pub validity: Option<ValidityReport>,
}

/// Least-squares slope of ln(norm) against ln(ħ). `flagged` marks series that sit at
/// round-off, for which the slope is NaN.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    pub o_prime: SlopeFit,
    pub odd_h_fw: SlopeFit,
    pub eriksen: Option<SlopeFit>,
    pub warnings: Vec<String>,
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn fit(points: &[ProbePoint], value: impl Fn(&ProbePoint) -> f64, round_off: f64) -> SlopeFit {
    let xs: Vec<f64> = points.iter().map(|p| p.hbar).collect();
    let ys: Vec<f64> = points.iter().map(&value).collect();
    let at_round_off = points.iter().zip(&ys).all(|(p, y)| *y <= round_off * p.h_fw_norm);
    if at_round_off || ys.iter().any(|y| !(*y > 0.0)) {
        return SlopeFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            flagged: true,
        };
    }
    let (slope, intercept) = loglog_slope(&xs, &ys);
    SlopeFit {
        slope,
        intercept,
        flagged: false,
    }
}

fn probe_point(hbar: f64, input: ProbeInput, opts: &ProbeOptions) -> Result<ProbePoint> {
    let res = general_fw(&input.split, &opts.fw)?;
    let p = input.projector.as_ref();
    let eriksen_deviation = if opts.with_eriksen {
        let e = oracle::eriksen_fw(&input.split.hamiltonian(), &opts.fw.tol)?;
        Some((&res.h_fw - &e.h_diag).upper_band_norm(p)?)
    } else {
        None
    };
    Ok(ProbePoint {
        hbar,
        o_prime_norm: res.o_prime.band_norm(p)?,
        odd_h_fw_norm: res.h_fw.odd().band_norm(p)?,
        eriksen_deviation,
        h_fw_norm: res.h_fw.band_norm(p)?,
        unitarity_defect: res.unitarity_defect,
        conjugation_defect: res.conjugation_defect,
        validity: input.validity,
    })
}

/// Runs the general transform at each ħ and fits the order of the residuals.
pub fn hbar_scaling_probe<F>(builder: F, hbar_values: &[f64], opts: &ProbeOptions) -> Result<ProbeReport>
where
    F: Fn(f64) -> Result<ProbeInput> + Sync,
{
    if hbar_values.len() < 3 {
        return Err(FwError::InvalidParameter("the probe needs at least three values of hbar".into()));
    }
    if hbar_values.iter().any(|h| !(*h > 0.0)) {
        return Err(FwError::InvalidParameter("hbar values must be positive".into()));
    }
    let run = |h: &f64| builder(*h).and_then(|input| probe_point(*h, input, opts));
    let points: Vec<ProbePoint> = match opts.jobs {
        Some(1) => hbar_values.iter().map(run).collect::<Result<_>>()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FwError::InvalidParameter(e.to_string()))?
            .install(|| hbar_values.par_iter().map(run).collect::<Result<_>>())?,
        None => hbar_values.par_iter().map(run).collect::<Result<_>>()?,
    };

    let mut warnings = Vec::new();
    let lo = hbar_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hbar_values.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        warnings.push(format!("hbar values span a factor {:.2}, less than one decade", hi / lo));
    }
    for p in &points {
        if let Some(v) = &p.validity {
            if !v.ok {
                warnings.push(format!(
                    "hbar = {}: lambda/l = {:.4} exceeds {}",
                    p.hbar, v.lambda_over_l, v.threshold
                ));
            }
        }
    }
    Ok(ProbeReport {
        o_prime: fit(&points, |p| p.o_prime_norm, opts.round_off),
        odd_h_fw: fit(&points, |p| p.odd_h_fw_norm, opts.round_off),
        eriksen: opts
            .with_eriksen
            .then(|| fit(&points, |p| p.eriksen_deviation.unwrap_or(0.0), opts.round_off)),
        points,
        warnings,
    })
}
