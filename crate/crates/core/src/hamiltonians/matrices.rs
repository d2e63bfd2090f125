//! Spin matrices in the standard (Dirac) representation, 4×4 unless noted.

use crate::linalg::{CMatrix, C64, I, ONE, ZERO};

fn m2(a: [C64; 4]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &a)
}

/// Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli() -> [CMatrix; 3] {
    [
        m2([ZERO, ONE, ONE, ZERO]),
        m2([ZERO, -I, I, ZERO]),
        m2([ONE, ZERO, ZERO, -ONE]),
    ]
}

fn blocks(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(a);
    m.view_mut((0, 2), (2, 2)).copy_from(b);
    m.view_mut((2, 0), (2, 2)).copy_from(c);
    m.view_mut((2, 2), (2, 2)).copy_from(d);
    m
}

pub fn beta() -> CMatrix {
    let one = CMatrix::identity(2, 2);
    let zero = CMatrix::zeros(2, 2);
    blocks(&one, &zero, &zero, &-&one)
}

/// α = [[0, σ], [σ, 0]]
pub fn alpha() -> [CMatrix; 3] {
    let z = CMatrix::zeros(2, 2);
    pauli().map(|s| blocks(&z, &s, &s, &z))
}

/// γ = [[0, σ], [−σ, 0]]
pub fn gamma() -> [CMatrix; 3] {
    let z = CMatrix::zeros(2, 2);
    pauli().map(|s| blocks(&z, &s, &-&s, &z))
}

/// Σ = diag(σ, σ)
pub fn sigma() -> [CMatrix; 3] {
    let z = CMatrix::zeros(2, 2);
    pauli().map(|s| blocks(&s, &z, &z, &s))
}

/// Π = βΣ = diag(σ, −σ)
pub fn polarization() -> [CMatrix; 3] {
    let z = CMatrix::zeros(2, 2);
    pauli().map(|s| blocks(&s, &z, &z, &-&s))
}

/// ρ₁, ρ₂, ρ₃ acting on the two Feshbach–Villars components.
pub fn rho() -> [CMatrix; 3] {
    pauli()
}

/// iρ₂ = [[0, 1], [−1, 0]]
pub fn i_rho2() -> CMatrix {
    m2([ZERO, ONE, -ONE, ZERO])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul;

    fn anti(a: &CMatrix, b: &CMatrix) -> CMatrix {
        matmul(a, b) + matmul(b, a)
    }

    #[test]
    fn clifford_relations() {
        let b = beta();
        let id = CMatrix::identity(4, 4);
        let a = alpha();
        for i in 0..3 {
            assert_eq!(anti(&a[i], &b), CMatrix::zeros(4, 4));
            for j in 0..3 {
                let expect = if i == j { &id * C64::new(2.0, 0.0) } else { CMatrix::zeros(4, 4) };
                assert_eq!(anti(&a[i], &a[j]), expect);
            }
        }
    }

    #[test]
    fn derived_matrices_are_products_of_beta() {
        let b = beta();
        let (a, g, s, p) = (alpha(), gamma(), sigma(), polarization());
        for i in 0..3 {
            assert_eq!(g[i], matmul(&b, &a[i]));
            assert_eq!(p[i], matmul(&b, &s[i]));
        }
        assert_eq!(i_rho2(), &rho()[1] * I);
    }
}
