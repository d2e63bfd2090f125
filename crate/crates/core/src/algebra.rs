//! β-graded block operators over a tagged finite basis.
//!
//! Index order is spinor-major: entry `s * n + j` is spinor component `s` at spatial
//! basis state `j`, so β = diag(+1, …, +1, −1, …, −1) with the upper spinor first.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{FwError, Result};
use crate::linalg::{self, CMatrix, Factorization, C64};

/// Relative Frobenius thresholds shared by the predicates and the transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub grading: f64,
    pub hermiticity: f64,
    /// Scaled by ‖A‖·‖B‖ when deciding whether two operators commute.
    pub commutation: f64,
    /// Relative distance of the spectrum from zero below which the sign function is undefined.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grading: 1e-10,
            hermiticity: 1e-10,
            commutation: 1e-12,
            gap: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisTag(Arc<str>);

impl BasisTag {
    pub fn new(name: impl AsRef<str>) -> Self {
        BasisTag(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Spinor rank, spatial dimension and basis identity of an operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    spinor_rank: usize,
    n: usize,
    basis: BasisTag,
}

impl Space {
    pub fn new(spinor_rank: usize, n: usize, basis: BasisTag) -> Result<Self> {
        if spinor_rank != 2 && spinor_rank != 4 {
            return Err(FwError::InvalidBasis(format!(
                "spinor rank must be 2 or 4, got {spinor_rank}"
            )));
        }
        if n == 0 {
            return Err(FwError::InvalidBasis("empty spatial basis".into()));
        }
        Ok(Self {
            spinor_rank,
            n,
            basis,
        })
    }

    pub fn spinor_rank(&self) -> usize {
        self.spinor_rank
    }

    /// Spatial dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.spinor_rank * self.n
    }

    /// Size of the upper (β = +1) block.
    pub fn half(&self) -> usize {
        self.dim() / 2
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn operator(&self, matrix: CMatrix) -> Result<BlockOperator> {
        if matrix.nrows() != self.dim() || matrix.ncols() != self.dim() {
            return Err(FwError::InvalidBasis(format!(
                "matrix is {}x{} but basis '{}' with spinor rank {} needs {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                self.basis,
                self.spinor_rank,
                self.dim(),
                self.dim()
            )));
        }
        Ok(BlockOperator {
            matrix,
            space: self.clone(),
        })
    }

    fn wrap(&self, matrix: CMatrix) -> BlockOperator {
        debug_assert_eq!(matrix.nrows(), self.dim());
        BlockOperator {
            matrix,
            space: self.clone(),
        }
    }

    pub fn zeros(&self) -> BlockOperator {
        self.wrap(CMatrix::zeros(self.dim(), self.dim()))
    }

    pub fn identity(&self) -> BlockOperator {
        self.wrap(CMatrix::identity(self.dim(), self.dim()))
    }

    pub fn scalar(&self, s: C64) -> BlockOperator {
        self.wrap(linalg::scaled_identity(self.dim(), s))
    }

    pub fn beta(&self) -> BlockOperator {
        let h = self.half();
        self.wrap(CMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i != j {
                linalg::ZERO
            } else if i < h {
                linalg::ONE
            } else {
                -linalg::ONE
            }
        }))
    }

    /// `spin ⊗ spatial`.
    pub fn kron(&self, spin: &CMatrix, spatial: &CMatrix) -> Result<BlockOperator> {
        if spin.shape() != (self.spinor_rank, self.spinor_rank) || spatial.shape() != (self.n, self.n) {
            return Err(FwError::InvalidBasis(format!(
                "kron factors {:?} and {:?} do not fit spinor rank {} over n = {}",
                spin.shape(),
                spatial.shape(),
                self.spinor_rank,
                self.n
            )));
        }
        Ok(self.wrap(linalg::kron(spin, spatial)))
    }

    /// `1 ⊗ spatial`.
    pub fn lift(&self, spatial: &CMatrix) -> Result<BlockOperator> {
        self.kron(&CMatrix::identity(self.spinor_rank, self.spinor_rank), spatial)
    }
}

#[derive(Clone, Debug)]
pub struct BlockOperator {
    matrix: CMatrix,
    space: Space,
}

#[derive(Clone, Debug)]
pub struct GradedParts {
    pub even: BlockOperator,
    pub odd: BlockOperator,
}

impl GradedParts {
    pub fn recombine(&self) -> BlockOperator {
        &self.even + &self.odd
    }
}

impl BlockOperator {
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn spinor_rank(&self) -> usize {
        self.space.spinor_rank
    }

    pub fn basis(&self) -> &BasisTag {
        &self.space.basis
    }

    pub fn check_same_space(&self, other: &BlockOperator) -> Result<()> {
        if self.space != other.space {
            return Err(FwError::InvalidBasis(format!(
                "operands live in different spaces ({} rank {} n {} vs {} rank {} n {})",
                self.space.basis,
                self.space.spinor_rank,
                self.space.n,
                other.space.basis,
                other.space.spinor_rank,
                other.space.n
            )));
        }
        Ok(())
    }

    fn with(&self, matrix: CMatrix) -> BlockOperator {
        self.space.wrap(matrix)
    }

    fn map_blocks(&self, f: impl Fn(bool, bool, C64) -> C64) -> BlockOperator {
        let h = self.space.half();
        let mut m = self.matrix.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] = f(i < h, j < h, m[(i, j)]);
            }
        }
        self.with(m)
    }

    /// βAβ: the off-diagonal blocks change sign.
    pub fn beta_conj(&self) -> BlockOperator {
        self.map_blocks(|ui, uj, z| if ui == uj { z } else { -z })
    }

    /// βA
    pub fn beta_left(&self) -> BlockOperator {
        self.map_blocks(|ui, _, z| if ui { z } else { -z })
    }

    /// Aβ
    pub fn beta_right(&self) -> BlockOperator {
        self.map_blocks(|_, uj, z| if uj { z } else { -z })
    }

    pub fn even(&self) -> BlockOperator {
        self.map_blocks(|ui, uj, z| if ui == uj { z } else { linalg::ZERO })
    }

    pub fn odd(&self) -> BlockOperator {
        self.map_blocks(|ui, uj, z| if ui != uj { z } else { linalg::ZERO })
    }

    /// even = ½(A + βAβ), odd = ½(A − βAβ). With β = diag(±1) these are exactly the
    /// diagonal and off-diagonal blocks, so the split is free of rounding.
    pub fn grade_split(&self) -> GradedParts {
        GradedParts {
            even: self.even(),
            odd: self.odd(),
        }
    }

    pub fn adjoint(&self) -> BlockOperator {
        self.with(self.matrix.adjoint())
    }

    /// βA†β
    pub fn pseudo_adjoint(&self) -> BlockOperator {
        self.adjoint().beta_conj()
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn spectral_norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }

    pub fn rel_diff(&self, other: &BlockOperator) -> f64 {
        linalg::rel_diff(&self.matrix, &other.matrix)
    }

    fn relative(part: f64, whole: f64) -> f64 {
        if whole == 0.0 {
            0.0
        } else {
            part / whole
        }
    }

    /// ‖odd(A)‖/‖A‖
    pub fn odd_fraction(&self) -> f64 {
        Self::relative(self.odd().norm(), self.norm())
    }

    pub fn even_fraction(&self) -> f64 {
        Self::relative(self.even().norm(), self.norm())
    }

    pub fn is_even(&self, tol: f64) -> bool {
        self.odd_fraction() <= tol
    }

    pub fn is_odd(&self, tol: f64) -> bool {
        self.even_fraction() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::is_hermitian(&self.matrix, tol)
    }

    pub fn is_pseudo_hermitian(&self, tol: f64) -> bool {
        Self::relative((&self.pseudo_adjoint() - self).norm(), self.norm()) <= tol
    }

    pub fn scale(&self, s: C64) -> BlockOperator {
        self.with(&self.matrix * s)
    }

    pub fn scale_re(&self, s: f64) -> BlockOperator {
        self.scale(linalg::re(s))
    }

    /// Block (a, b) with a, b ∈ {0 = upper, 1 = lower}.
    pub fn block(&self, a: usize, b: usize) -> CMatrix {
        let h = self.space.half();
        self.matrix.view((a * h, b * h), (h, h)).into_owned()
    }

    /// (1 ⊗ P) A (1 ⊗ P) for a spatial matrix P.
    pub fn sandwich_spatial(&self, p: &CMatrix) -> Result<BlockOperator> {
        let lifted = self.space.lift(p)?;
        Ok(&(&lifted * self) * &lifted)
    }

    /// Spectral norm of the operator restricted by an optional spatial projector.
    pub fn band_norm(&self, projector: Option<&CMatrix>) -> Result<f64> {
        match projector {
            None => Ok(self.spectral_norm()),
            Some(p) => Ok(self.sandwich_spatial(p)?.spectral_norm()),
        }
    }

    /// Spectral norm of the positive-energy (upper) block, optionally band-restricted.
    pub fn upper_band_norm(&self, projector: Option<&CMatrix>) -> Result<f64> {
        let upper = self.block(0, 0);
        match projector {
            None => Ok(linalg::spectral_norm(&upper)),
            Some(p) => {
                let r = self.space.spinor_rank / 2;
                if p.shape() != (self.space.n, self.space.n) {
                    return Err(FwError::InvalidBasis("projector does not match the spatial basis".into()));
                }
                let lifted = linalg::kron(&CMatrix::identity(r, r), p);
                let restricted = linalg::matmul(&linalg::matmul(&lifted, &upper), &lifted);
                Ok(linalg::spectral_norm(&restricted))
            }
        }
    }

    pub fn factorize(&self, hermitian_tol: f64) -> Result<Factorization> {
        Factorization::new(&self.matrix, hermitian_tol)
    }

    pub fn apply_inverse_left(&self, f: &Factorization) -> BlockOperator {
        self.with(f.solve_left(&self.matrix))
    }

    pub fn apply_inverse_right(&self, f: &Factorization) -> BlockOperator {
        self.with(f.solve_right(&self.matrix))
    }
}

/// [A, B] = AB − BA
pub fn commutator(a: &BlockOperator, b: &BlockOperator) -> Result<BlockOperator> {
    a.check_same_space(b)?;
    Ok(&(a * b) - &(b * a))
}

/// {A, B} = AB + BA
pub fn anticommutator(a: &BlockOperator, b: &BlockOperator) -> Result<BlockOperator> {
    a.check_same_space(b)?;
    Ok(&(a * b) + &(b * a))
}

pub fn grade_split(a: &BlockOperator) -> GradedParts {
    a.grade_split()
}

pub fn pseudo_adjoint(a: &BlockOperator) -> BlockOperator {
    a.pseudo_adjoint()
}

/// Principal square root with a factorization of the root for later solves.
#[derive(Clone, Debug)]
pub struct OperatorRoot {
    pub root: BlockOperator,
    pub factor: Factorization,
}

impl OperatorRoot {
    /// R⁻¹ A
    pub fn inv_left(&self, a: &BlockOperator) -> BlockOperator {
        a.apply_inverse_left(&self.factor)
    }

    /// A R⁻¹
    pub fn inv_right(&self, a: &BlockOperator) -> BlockOperator {
        a.apply_inverse_right(&self.factor)
    }
}

/// Principal square root; the eigendecomposition path is taken for hermitian operands,
/// the Schur path otherwise.
pub fn operator_sqrt(a: &BlockOperator, tol: &Tolerances) -> Result<OperatorRoot> {
    let (root, factor) = linalg::sqrtm(&a.matrix, tol.hermiticity)?;
    Ok(OperatorRoot {
        root: a.with(root),
        factor,
    })
}

fn assert_same(a: &BlockOperator, b: &BlockOperator) {
    if let Err(e) = a.check_same_space(b) {
        panic!("{e}");
    }
}

impl<'a> Add<&'a BlockOperator> for &'a BlockOperator {
    type Output = BlockOperator;
    fn add(self, rhs: &BlockOperator) -> BlockOperator {
        assert_same(self, rhs);
        self.with(&self.matrix + &rhs.matrix)
    }
}

impl<'a> Sub<&'a BlockOperator> for &'a BlockOperator {
    type Output = BlockOperator;
    fn sub(self, rhs: &BlockOperator) -> BlockOperator {
        assert_same(self, rhs);
        self.with(&self.matrix - &rhs.matrix)
    }
}

impl<'a> Mul<&'a BlockOperator> for &'a BlockOperator {
    type Output = BlockOperator;
    fn mul(self, rhs: &BlockOperator) -> BlockOperator {
        assert_same(self, rhs);
        self.with(linalg::matmul(&self.matrix, &rhs.matrix))
    }
}

impl Add for BlockOperator {
    type Output = BlockOperator;
    fn add(self, rhs: BlockOperator) -> BlockOperator {
        &self + &rhs
    }
}

impl Sub for BlockOperator {
    type Output = BlockOperator;
    fn sub(self, rhs: BlockOperator) -> BlockOperator {
        &self - &rhs
    }
}

impl Mul for BlockOperator {
    type Output = BlockOperator;
    fn mul(self, rhs: BlockOperator) -> BlockOperator {
        &self * &rhs
    }
}

impl Neg for &BlockOperator {
    type Output = BlockOperator;
    fn neg(self) -> BlockOperator {
        self.with(-&self.matrix)
    }
}

impl Neg for BlockOperator {
    type Output = BlockOperator;
    fn neg(self) -> BlockOperator {
        -&self
    }
}

impl Mul<f64> for &BlockOperator {
    type Output = BlockOperator;
    fn mul(self, s: f64) -> BlockOperator {
        self.scale_re(s)
    }
}

impl Mul<C64> for &BlockOperator {
    type Output = BlockOperator;
    fn mul(self, s: C64) -> BlockOperator {
        self.scale(s)
    }
}

impl Mul<f64> for BlockOperator {
    type Output = BlockOperator;
    fn mul(self, s: f64) -> BlockOperator {
        self.scale_re(s)
    }
}

impl Mul<C64> for BlockOperator {
    type Output = BlockOperator;
    fn mul(self, s: C64) -> BlockOperator {
        self.scale(s)
    }
}
