//! Dense complex matrix helpers shared by every module.
//!
//! Everything here operates on [`CMatrix`], a heap-allocated `nalgebra`
//! matrix of `Complex64`. Generators are skew-Hermitian (`A† = -A`);
//! propagators are unitary.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iφ}`, exact at multiples of π/2 so that the phase-π/2 drives have
/// purely real entries.
pub fn cis(phi: f64) -> C64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if phi == 0.0 {
        c(1.0, 0.0)
    } else if phi == FRAC_PI_2 {
        c(0.0, 1.0)
    } else if phi == -FRAC_PI_2 {
        c(0.0, -1.0)
    } else if phi == PI || phi == -PI {
        c(-1.0, 0.0)
    } else {
        C64::from_polar(1.0, phi)
    }
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Matrix unit `E_pq` (0-based) of size `n`.
pub fn unit(n: usize, p: usize, q: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(p, q)] = C64::new(1.0, 0.0);
    m
}

/// `E_pq - E_qp`.
pub fn real_pair(n: usize, p: usize, q: usize) -> CMatrix {
    unit(n, p, q) - unit(n, q, p)
}

/// `i (E_pq + E_qp)`.
pub fn imag_pair(n: usize, p: usize, q: usize) -> CMatrix {
    (unit(n, p, q) + unit(n, q, p)) * I
}

/// `i (E_pp - E_qq)`.
pub fn diag_pair(n: usize, p: usize, q: usize) -> CMatrix {
    (unit(n, p, p) - unit(n, q, q)) * I
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real Hilbert-Schmidt inner product `Re tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `max |A + A†|` over entries.
pub fn skew_defect(a: &CMatrix) -> f64 {
    max_abs(&(a + a.adjoint()))
}

/// `max |U†U - I|` over entries.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - identity(n)))
}

pub fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(a.nrows(), a.ncols()));
    }
    Ok(a.nrows())
}

pub fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<usize> {
    let n = check_square(a)?;
    let m = check_square(b)?;
    if n != m {
        return Err(Error::DimensionMismatch(n, m));
    }
    Ok(n)
}

/// `exp(t A)` for skew-Hermitian `A`, via unitary diagonalisation of the
/// Hermitian matrix `-iA`.
pub fn expm_skew(a: &CMatrix, t: f64) -> CMatrix {
    let n = a.nrows();
    if n == 0 {
        return zeros(0);
    }
    // Symmetrise away roundoff so the eigensolver sees an exactly Hermitian input.
    let h = a * (-I);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, t * l)),
    ));
    v * phases * v.adjoint()
}

/// Top-left `n x n` block.
pub fn restrict(u: &CMatrix, n: usize) -> CMatrix {
    u.view((0, 0), (n, n)).into_owned()
}

/// Embed `a` into the top-left corner of an `n x n` zero matrix.
pub fn embed(a: &CMatrix, n: usize) -> CMatrix {
    let mut out = zeros(n);
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out
}

/// Row-major `[[re, im], ...]` serialisation of a dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonMatrix(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for JsonMatrix {
    fn from(m: &CMatrix) -> Self {
        JsonMatrix(
            (0..m.nrows())
                .map(|r| {
                    (0..m.ncols())
                        .map(|c| {
                            let z = m[(r, c)];
                            // Normalise -0.0 so reports are byte-stable.
                            [z.re + 0.0, z.im + 0.0]
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

impl JsonMatrix {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.0.len();
        if self.0.iter().any(|row| row.len() != n) {
            return Err(Error::Malformed("matrix must be square".into()));
        }
        Ok(CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = self.0[r][c];
            C64::new(re, im)
        }))
    }
}

/// `#[serde(with = "linalg::json_matrix")]` for `CMatrix` fields.
pub mod json_matrix {
    use super::{CMatrix, JsonMatrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        JsonMatrix::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let j = JsonMatrix::deserialize(d)?;
        j.to_matrix().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_products_follow_kronecker_rule() {
        let n = 4;
        for (p, q, r, s) in [(0, 1, 1, 2), (0, 1, 2, 3), (2, 3, 3, 0)] {
            let lhs = unit(n, p, q) * unit(n, r, s);
            let rhs = if q == r { unit(n, p, s) } else { zeros(n) };
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn expm_of_pauli_x_generator() {
        let a = imag_pair(2, 0, 1);
        let u = expm_skew(&a, std::f64::consts::FRAC_PI_2);
        assert!((u[(0, 1)] - I).norm() < 1e-14);
        assert!((u[(1, 0)] - I).norm() < 1e-14);
        assert!(u[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn op_norm_of_rotation_block() {
        let a = real_pair(3, 0, 2) * c(0.25, 0.0);
        assert!((op_norm(&a) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn json_roundtrip() {
        let a = imag_pair(3, 0, 2) + real_pair(3, 1, 2);
        let j = JsonMatrix::from(&a);
        assert_eq!(j.to_matrix().unwrap(), a);
    }
}
