//! Brute-force validators: the one-step Eriksen transformation built from the sign
//! of H, exact evolution of small systems, and Ehrenfest comparisons.

use nalgebra::{Cholesky, DVector};
use serde::Serialize;

use crate::algebra::{BlockOperator, Space, Tolerances};
use crate::error::{FwError, Result};
use crate::hamiltonians::{FieldConfiguration, Observables, ParticleParams, V3};
use crate::linalg::{self, matmul, re, CMatrix, CVector, HermitianEigen, C64, I};
use crate::semiclassical::{self, PhaseSpinState, ValidityReport};
use crate::transform::HermiticityClass;

/// Largest dimension handled by `evolve`.
pub const MAX_EVOLVE_DIM: usize = 2048;
/// λ/l bound for an Ehrenfest comparison to be meaningful.
pub const EHRENFEST_VALIDITY: f64 = 0.01;

/// H = V diag(λ) V⁻¹ with real λ, or no usable diagonalization.
#[derive(Clone, Debug)]
enum Spectral {
    Hermitian(HermitianEigen),
    /// From βH = LL† > 0: H = V diag(λ) V⁻¹, V = L⁻†W, V⁻¹ = W†L†.
    Balanced {
        values: DVector<f64>,
        v: CMatrix,
        v_inv: CMatrix,
    },
    General,
}

impl Spectral {
    fn of(h: &BlockOperator, tol: &Tolerances) -> Self {
        if h.is_hermitian(tol.hermiticity) {
            return Spectral::Hermitian(HermitianEigen::new(h.matrix()));
        }
        if h.is_pseudo_hermitian(tol.hermiticity) {
            if let Some(s) = balanced(h) {
                return s;
            }
        }
        Spectral::General
    }

    fn values(&self) -> Option<&DVector<f64>> {
        match self {
            Spectral::Hermitian(e) => Some(&e.values),
            Spectral::Balanced { values, .. } => Some(values),
            Spectral::General => None,
        }
    }

    /// V f(Λ) V⁻¹
    fn map(&self, f: impl Fn(f64) -> C64) -> Option<CMatrix> {
        match self {
            Spectral::Hermitian(e) => Some(e.map_complex(f)),
            Spectral::Balanced { values, v, v_inv } => {
                let mut left = v.clone();
                for (j, mut col) in left.column_iter_mut().enumerate() {
                    col *= f(values[j]);
                }
                Some(matmul(&left, v_inv))
            }
            Spectral::General => None,
        }
    }

    /// V f(Λ) V⁻¹ x without forming the matrix.
    fn apply(&self, f: impl Fn(f64) -> C64, x: &CVector) -> Option<CVector> {
        let (values, v, y) = match self {
            Spectral::Hermitian(e) => (&e.values, &e.vectors, e.vectors.adjoint() * x),
            Spectral::Balanced { values, v, v_inv } => (values, v, v_inv * x),
            Spectral::General => return None,
        };
        let scaled = CVector::from_iterator(y.len(), y.iter().enumerate().map(|(i, z)| z * f(values[i])));
        Some(v * scaled)
    }
}

/// Generalized hermitian problem Hv = λv ⇔ βHv = λβv, with βH positive definite.
fn balanced(h: &BlockOperator) -> Option<Spectral> {
    let bh = linalg::hermitian_part(h.beta_left().matrix());
    let l = Cholesky::new(bh)?.l();
    let beta = h.space().beta().into_matrix();
    // K = L⁻¹ β L⁻†, hermitian, with eigenvalues 1/λ.
    let x = l.solve_lower_triangular(&beta)?;
    let k = l.solve_lower_triangular(&x.adjoint())?.adjoint();
    let ke = HermitianEigen::new(&k);
    if ke.values.iter().any(|&k| k == 0.0) {
        return None;
    }
    let v = l.adjoint().solve_upper_triangular(&ke.vectors)?;
    let v_inv = matmul(&ke.vectors.adjoint(), &l.adjoint());
    Some(Spectral::Balanced {
        values: ke.values.map(|k| 1.0 / k),
        v,
        v_inv,
    })
}

fn check_gap(values: &DVector<f64>, tol: &Tolerances) -> Result<f64> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if max == 0.0 || min <= tol.gap * max {
        return Err(FwError::GapClosure(format!(
            "smallest |eigenvalue| {min:.3e} against largest {max:.3e}"
        )));
    }
    Ok(min / max)
}

/// Outcome of the Eriksen transformation U = ½(1+βλ)[1+¼(βλ+λβ−2)]^(−1/2).
#[derive(Clone, Debug)]
pub struct EriksenResult {
    pub u: BlockOperator,
    pub u_inv: BlockOperator,
    pub h_diag: BlockOperator,
    /// λ = H/(H²)^(1/2)
    pub sign: BlockOperator,
    pub class: HermiticityClass,
    /// min|eigenvalue| / max|eigenvalue|, when the spectrum was computed.
    pub relative_gap: Option<f64>,
    /// ‖odd(H_diag)‖ / ‖H_diag‖
    pub odd_residual: f64,
}

pub fn eriksen_fw(h: &BlockOperator, tol: &Tolerances) -> Result<EriksenResult> {
    let space = h.space().clone();
    let class = HermiticityClass::of(h, tol.hermiticity);
    let spectral = Spectral::of(h, tol);
    let (sign, relative_gap) = match spectral.values() {
        Some(values) => {
            let gap = check_gap(values, tol)?;
            let s = spectral.map(|x| re(x.signum())).expect("spectrum available");
            (s, Some(gap))
        }
        None => (general_sign(h.matrix())?, None),
    };
    let sign = space.operator(sign)?;
    let beta = space.beta();
    let bl = &beta * &sign;
    let lb = &sign * &beta;
    let one = space.identity();
    let z = &one.scale_re(0.5) + &(&bl + &lb).scale_re(0.25);
    let (_, fac) = linalg::sqrtm(z.matrix(), tol.hermiticity).map_err(|e| match e {
        FwError::SingularSqrt(m) => FwError::GapClosure(format!("Eriksen normalization: {m}")),
        other => other,
    })?;
    let z_inv_sqrt = space.operator(fac.solve_left(&CMatrix::identity(space.dim(), space.dim())))?;
    let u = (&(&one + &bl) * &z_inv_sqrt).scale_re(0.5);
    let u_inv = (&z_inv_sqrt * &(&one + &lb)).scale_re(0.5);
    let h_diag = &(&u * h) * &u_inv;
    let odd_residual = h_diag.odd_fraction();
    Ok(EriksenResult {
        u,
        u_inv,
        h_diag,
        sign,
        class,
        relative_gap,
        odd_residual,
    })
}

/// H (H²)^(−1/2) through a Schur square root.
fn general_sign(h: &CMatrix) -> Result<CMatrix> {
    let h2 = matmul(h, h);
    let root = linalg::sqrtm_schur(&h2).map_err(|e| match e {
        FwError::SingularSqrt(m) => FwError::GapClosure(m),
        other => other,
    })?;
    let f = linalg::Factorization::lu(&root).map_err(|_| FwError::GapClosure("H² is singular".into()))?;
    Ok(f.solve_right(h))
}

/// Norm used for a wavefunction: ψ†ψ, or ψ†βψ for the spin-0 two-component form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormConvention {
    Standard,
    BetaWeighted,
}

impl NormConvention {
    pub fn for_rank(spinor_rank: usize) -> Self {
        if spinor_rank == 2 {
            NormConvention::BetaWeighted
        } else {
            NormConvention::Standard
        }
    }
}

#[derive(Clone, Debug)]
pub struct WavepacketState {
    pub psi: CVector,
    pub space: Space,
    pub convention: NormConvention,
}

impl WavepacketState {
    pub fn new(psi: CVector, space: Space) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(FwError::InvalidBasis(format!(
                "wavefunction has {} components, space has {}",
                psi.len(),
                space.dim()
            )));
        }
        let convention = NormConvention::for_rank(space.spinor_rank());
        Ok(Self { psi, space, convention })
    }

    fn weighted(&self, v: &CVector) -> CVector {
        match self.convention {
            NormConvention::Standard => v.clone(),
            NormConvention::BetaWeighted => {
                let h = self.space.half();
                let mut w = v.clone();
                w.rows_mut(h, h).neg_mut();
                w
            }
        }
    }

    /// ψ†ψ or ψ†βψ
    pub fn norm(&self) -> f64 {
        self.psi.dotc(&self.weighted(&self.psi)).re
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(FwError::InvalidParameter(format!("cannot normalize a state of norm {n:.3e}")));
        }
        self.psi /= re(n.sqrt());
        Ok(())
    }

    /// ⟨A⟩ = ψ†Aψ / ψ†ψ, or ψ†βAψ / ψ†βψ.
    pub fn expectation(&self, a: &BlockOperator) -> Result<C64> {
        if a.space() != &self.space {
            return Err(FwError::InvalidBasis("observable and state live on different spaces".into()));
        }
        let av = a.matrix() * &self.psi;
        Ok(self.weighted(&self.psi).dotc(&av) / re(self.norm()))
    }

    /// Gaussian packet exp(−(x−x₀)²/(4σ²) + ip₀x/ħ) on grid positions, with a fixed
    /// spinor, normalized in the space's convention.
    pub fn gaussian_on_grid(
        space: &Space,
        positions: &[f64],
        center: f64,
        width: f64,
        momentum: f64,
        hbar: f64,
        spinor: &[C64],
    ) -> Result<Self> {
        let n = space.n();
        if positions.len() != n || spinor.len() != space.spinor_rank() {
            return Err(FwError::InvalidBasis("grid or spinor does not match the space".into()));
        }
        if !(width > 0.0) {
            return Err(FwError::InvalidParameter("packet width must be positive".into()));
        }
        let envelope: Vec<C64> = positions
            .iter()
            .map(|&x| {
                let d = x - center;
                C64::new(-d * d / (4.0 * width * width), momentum * x / hbar).exp()
            })
            .collect();
        let psi = CVector::from_fn(space.dim(), |k, _| spinor[k / n] * envelope[k % n]);
        let mut s = Self::new(psi, space.clone())?;
        s.normalize()?;
        Ok(s)
    }
}

/// Evolution operator e^(−iHt/ħ) for a fixed, time-independent H.
#[derive(Clone, Debug)]
pub struct Propagator {
    h: BlockOperator,
    hbar: f64,
    spectral: Spectral,
}

impl Propagator {
    pub fn new(h: &BlockOperator, hbar: f64, tol: &Tolerances) -> Result<Self> {
        if h.dim() > MAX_EVOLVE_DIM {
            return Err(FwError::Unsupported(format!(
                "exact evolution limited to dimension {MAX_EVOLVE_DIM}, got {}",
                h.dim()
            )));
        }
        if !(hbar > 0.0) {
            return Err(FwError::InvalidParameter("hbar must be positive".into()));
        }
        Ok(Self {
            h: h.clone(),
            hbar,
            spectral: Spectral::of(h, tol),
        })
    }

    pub fn apply(&self, psi: &WavepacketState, t: f64) -> Result<WavepacketState> {
        if psi.space != *self.h.space() {
            return Err(FwError::InvalidBasis("state and Hamiltonian live on different spaces".into()));
        }
        let phase = |e: f64| (-I * (e * t / self.hbar)).exp();
        let out = match self.spectral.apply(phase, &psi.psi) {
            Some(v) => v,
            None => linalg::expm(&(self.h.matrix() * (-I * (t / self.hbar)))) * &psi.psi,
        };
        Ok(WavepacketState {
            psi: out,
            space: psi.space.clone(),
            convention: psi.convention,
        })
    }
}

/// ψ(t) = e^(−iHt/ħ) ψ₀
pub fn evolve(psi0: &WavepacketState, h: &BlockOperator, t: f64, hbar: f64, tol: &Tolerances) -> Result<WavepacketState> {
    Propagator::new(h, hbar, tol)?.apply(psi0, t)
}

/// Expectation values of position, π and (for Dirac spinors) Π.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Moments {
    pub position: [f64; 3],
    pub pi: [f64; 3],
    pub polarization: Option<[f64; 3]>,
}

pub fn moments(psi: &WavepacketState, obs: &Observables) -> Result<Moments> {
    let mut position = [0.0; 3];
    let mut pi = [0.0; 3];
    for i in 0..3 {
        if let Some(x) = &obs.position[i] {
            position[i] = psi.expectation(x)?.re;
        }
        pi[i] = psi.expectation(&obs.pi[i])?.re;
    }
    let polarization = match &obs.polarization {
        Some(p) => Some([
            psi.expectation(&p[0])?.re,
            psi.expectation(&p[1])?.re,
            psi.expectation(&p[2])?.re,
        ]),
        None => None,
    };
    Ok(Moments {
        position,
        pi,
        polarization,
    })
}

/// d⟨π⟩/dt from quantum evolution against the semiclassical force at the averages.
#[derive(Clone, Debug, Serialize)]
pub struct EhrenfestRecord {
    pub moments: Moments,
    pub quantum_force: [f64; 3],
    pub classical_force: [f64; 3],
    /// |F_q − F_c| / max(|F_q|, |F_c|); zero when both vanish.
    pub relative_deviation: f64,
    pub validity: ValidityReport,
    pub flagged: bool,
}

/// Compares d⟨π⟩/dt, by a central difference of exact evolution over ±dt, with the
/// semiclassical force evaluated at (⟨r⟩, ⟨π⟩, ⟨Π⟩). Spinless states use the scalar
/// force, Dirac spinors the full spin-1/2 force.
pub fn ehrenfest_check(
    psi0: &WavepacketState,
    h_fw: &BlockOperator,
    obs: &Observables,
    field: &FieldConfiguration,
    params: &ParticleParams,
    dt: f64,
    tol: &Tolerances,
) -> Result<EhrenfestRecord> {
    if !(dt > 0.0) {
        return Err(FwError::InvalidParameter("dt must be positive".into()));
    }
    let prop = Propagator::new(h_fw, params.hbar, tol)?;
    let m0 = moments(psi0, obs)?;
    let plus = moments(&prop.apply(psi0, dt)?, obs)?;
    let minus = moments(&prop.apply(psi0, -dt)?, obs)?;
    let quantum_force: [f64; 3] = std::array::from_fn(|i| (plus.pi[i] - minus.pi[i]) / (2.0 * dt));

    let r = V3::from(m0.position);
    let pi = V3::from(m0.pi);
    let state = match m0.polarization {
        Some(p) => PhaseSpinState::spin_half(r, pi, V3::from(p)),
        None => PhaseSpinState::scalar(r, pi),
    };
    let force = match state.polarization {
        Some(_) => semiclassical::rhs_spin_half(&state, field, params)?.dpi_dt(),
        None => semiclassical::rhs_scalar(&state, field, params)?,
    };
    let classical_force = [force.x, force.y, force.z];
    let fq = V3::from(quantum_force);
    let denom = fq.norm().max(force.norm());
    let relative_deviation = if denom == 0.0 { 0.0 } else { (fq - force).norm() / denom };
    let validity = semiclassical::validity_report(&state, field, params, EHRENFEST_VALIDITY);
    Ok(EhrenfestRecord {
        moments: m0,
        quantum_force,
        classical_force,
        relative_deviation,
        flagged: !validity.ok,
        validity,
    })
}
