//! Dense complex matrix kernels: products, hermitian eigen-functions, Schur square
//! roots, factorized solves and the Padé exponential.

use nalgebra::{DMatrix, DVector, Dyn, Schur, SymmetricEigen, LU};
use num_complex::Complex;

use crate::error::{FwError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

// Below this size the generic complex kernel is fast enough.
const SPLIT_MIN: usize = 24;

/// Complex matrix product through four real GEMMs, which use the blocked real kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_MIN {
        return a * b;
    }
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let mut rr = &ar * &br;
    rr.gemm(-1.0, &ai, &bi, 1.0);
    let mut ii = &ar * &bi;
    ii.gemm(1.0, &ai, &br, 1.0);
    rr.zip_map(&ii, C64::new)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            let mut view = out.view_mut((i * br, j * bc), (br, bc));
            view.zip_apply(b, |o, x| *o = aij * x);
        }
    }
    out
}

pub fn scaled_identity(n: usize, s: C64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, s)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * re(0.5)
}

/// Relative distance ‖a − b‖_F / max(‖a‖_F, ‖b‖_F), zero when both vanish.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let g = if a.nrows() >= a.ncols() {
        matmul(&a.adjoint(), a)
    } else {
        matmul(a, &a.adjoint())
    };
    let e = SymmetricEigen::new(hermitian_part(&g));
    e.eigenvalues.max().max(0.0).sqrt()
}

/// Eigendecomposition of a hermitian matrix (the antihermitian round-off is discarded).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix) -> Self {
        let e = SymmetricEigen::new(hermitian_part(a));
        Self {
            values: e.eigenvalues,
            vectors: e.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V f(Λ) V†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.map_complex(|x| re(f(x)))
    }

    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut left = self.vectors.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        matmul(&left, &self.vectors.adjoint())
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A matrix kept in factorized form so that A⁻¹B and BA⁻¹ are linear solves.
#[derive(Clone, Debug)]
pub enum Factorization {
    Hermitian(HermitianEigen),
    Lu {
        lu: LU<C64, Dyn, Dyn>,
        lu_t: LU<C64, Dyn, Dyn>,
    },
}

impl Factorization {
    pub fn hermitian(eigen: HermitianEigen) -> Result<Self> {
        let scale = eigen.max_abs();
        if eigen.min_abs() <= 1e-15 * scale || scale == 0.0 {
            return Err(FwError::SingularSqrt("operator is singular".into()));
        }
        Ok(Factorization::Hermitian(eigen))
    }

    pub fn lu(a: &CMatrix) -> Result<Self> {
        let lu = a.clone().lu();
        let lu_t = a.transpose().lu();
        if !lu.is_invertible() || !lu_t.is_invertible() {
            return Err(FwError::SingularSqrt("operator is singular".into()));
        }
        Ok(Factorization::Lu { lu, lu_t })
    }

    /// Factorizes `a`, using the eigen path when it is hermitian to `tol`.
    pub fn new(a: &CMatrix, tol: f64) -> Result<Self> {
        if is_hermitian(a, tol) {
            Self::hermitian(HermitianEigen::new(a))
        } else {
            Self::lu(a)
        }
    }

    /// A⁻¹ b
    pub fn solve_left(&self, b: &CMatrix) -> CMatrix {
        match self {
            Factorization::Hermitian(e) => {
                let mut y = matmul(&e.vectors.adjoint(), b);
                for (i, mut row) in y.row_iter_mut().enumerate() {
                    row /= re(e.values[i]);
                }
                matmul(&e.vectors, &y)
            }
            Factorization::Lu { lu, .. } => lu.solve(b).expect("factorization checked invertible"),
        }
    }

    /// b A⁻¹
    pub fn solve_right(&self, b: &CMatrix) -> CMatrix {
        match self {
            Factorization::Hermitian(e) => {
                let mut y = matmul(b, &e.vectors);
                for (j, mut col) in y.column_iter_mut().enumerate() {
                    col /= re(e.values[j]);
                }
                matmul(&y, &e.vectors.adjoint())
            }
            Factorization::Lu { lu_t, .. } => lu_t
                .solve(&b.transpose())
                .expect("factorization checked invertible")
                .transpose(),
        }
    }
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    let scale = a.norm();
    scale == 0.0 || (a - a.adjoint()).norm() <= tol * scale
}

/// Principal square root, returned together with a factorization of the root.
pub fn sqrtm(a: &CMatrix, hermitian_tol: f64) -> Result<(CMatrix, Factorization)> {
    if is_hermitian(a, hermitian_tol) {
        let e = HermitianEigen::new(a);
        let scale = e.max_abs();
        let min = e.values.min();
        if !(min > 1e-14 * scale) {
            return Err(FwError::SingularSqrt(format!(
                "hermitian operand has eigenvalue {min:.3e} (scale {scale:.3e})"
            )));
        }
        let root_eigen = HermitianEigen {
            values: e.values.map(f64::sqrt),
            vectors: e.vectors,
        };
        let root = root_eigen.map(|x| x);
        Ok((root, Factorization::Hermitian(root_eigen)))
    } else {
        let root = sqrtm_schur(a)?;
        let f = Factorization::lu(&root)?;
        Ok((root, f))
    }
}

/// Principal square root by complex Schur form and the triangular recurrence
/// r_ij = (t_ij − Σ_k r_ik r_kj) / (r_ii + r_jj).
pub fn sqrtm_schur(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let (q, t) = Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| FwError::SingularSqrt("Schur iteration did not converge".into()))?
        .unpack();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(t[(i, i)].norm()));
    for i in 0..n {
        let l = t[(i, i)];
        if !(l.re > 1e-14 * scale) {
            return Err(FwError::SingularSqrt(format!(
                "eigenvalue {l:.3e} has non-positive real part"
            )));
        }
    }
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in i + 1..j {
                s += r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = (t[(i, j)] - s) / (r[(i, i)] + r[(j, j)]);
        }
    }
    Ok(matmul(&matmul(&q, &r), &q.adjoint()))
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * re(0.5f64.powi(s));
    let id = CMatrix::identity(n, n);
    let a2 = matmul(&a, &a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let inner_u = &a6 * re(B[13]) + &a4 * re(B[11]) + &a2 * re(B[9]);
    let u = matmul(
        &a,
        &(matmul(&a6, &inner_u) + &a6 * re(B[7]) + &a4 * re(B[5]) + &a2 * re(B[3]) + &id * re(B[1])),
    );
    let inner_v = &a6 * re(B[12]) + &a4 * re(B[10]) + &a2 * re(B[8]);
    let v = matmul(&a6, &inner_v) + &a6 * re(B[6]) + &a4 * re(B[4]) + &a2 * re(B[2]) + &id * re(B[0]);
    let mut r = (&v - &u).lu().solve(&(&v + &u)).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn split_product_matches_generic_kernel() {
        let a = sample(40, 1);
        let b = sample(40, 2);
        assert!(rel_diff(&matmul(&a, &b), &(&a * &b)) < 1e-14);
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3));
        assert_eq!(k, CMatrix::identity(6, 6));
    }

    #[test]
    fn schur_root_squares_back() {
        let a = sample(12, 3) + scaled_identity(12, re(4.0));
        let r = sqrtm_schur(&a).unwrap();
        assert!(rel_diff(&matmul(&r, &r), &a) < 1e-12);
    }

    #[test]
    fn negative_eigenvalue_has_no_principal_root() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(-2.0)]));
        assert!(matches!(sqrtm(&a, 1e-10), Err(FwError::SingularSqrt(_))));
        assert!(matches!(sqrtm_schur(&a), Err(FwError::SingularSqrt(_))));
    }

    #[test]
    fn solves_agree_with_products() {
        let a = sample(30, 4) + scaled_identity(30, re(3.0));
        let b = sample(30, 5);
        let f = Factorization::lu(&a).unwrap();
        assert!(rel_diff(&matmul(&a, &f.solve_left(&b)), &b) < 1e-12);
        assert!(rel_diff(&matmul(&f.solve_right(&b), &a), &b) < 1e-12);
        let h = hermitian_part(&a) + scaled_identity(30, re(10.0));
        let f = Factorization::new(&h, 1e-12).unwrap();
        assert!(matches!(f, Factorization::Hermitian(_)));
        assert!(rel_diff(&matmul(&h, &f.solve_left(&b)), &b) < 1e-12);
        assert!(rel_diff(&matmul(&f.solve_right(&b), &h), &b) < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 7.3;
        let a = CMatrix::from_row_slice(2, 2, &[ZERO, re(-t), re(t), ZERO]);
        let e = expm(&a);
        assert!((e[(0, 0)] - re(t.cos())).norm() < 1e-13);
        assert!((e[(1, 0)] - re(t.sin())).norm() < 1e-13);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), C64::new(0.0, -3.0), re(2.0)]));
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-14);
    }
}
