//! Dynamical Lie algebra closure and the rank test for controllability.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::OperatorMatrix;

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// `AB - BA` for two generators of equal dimension.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    linalg::check_same_dim(&a.entries, &b.entries)?;
    Ok(OperatorMatrix {
        entries: linalg::commutator(&a.entries, &b.entries),
        kind: a.kind,
    })
}

/// Orthonormal basis (real Hilbert-Schmidt product) of a real Lie algebra of
/// skew-Hermitian matrices.
#[derive(Debug, Clone)]
pub struct LieBasis {
    pub elements: Vec<CMatrix>,
    /// Relative residual norm of every candidate examined, in queue order.
    pub residual_history: Vec<f64>,
    pub n: usize,
}

impl LieBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Component of `a` orthogonal to the span.
    pub fn residual(&self, a: &CMatrix) -> CMatrix {
        let mut r = a.clone();
        for e in &self.elements {
            let coef = linalg::hs_inner(e, &r);
            r -= e * C64::new(coef, 0.0);
        }
        r
    }

    /// `‖residual(a)‖ / ‖a‖`, zero for the zero matrix.
    pub fn relative_residual(&self, a: &CMatrix) -> f64 {
        let n = linalg::hs_norm(a);
        if n == 0.0 {
            return 0.0;
        }
        // two passes keep the projection accurate for nearly-dependent inputs
        let r = self.residual(&self.residual(a));
        linalg::hs_norm(&r) / n
    }

    pub fn contains(&self, a: &CMatrix, tol: f64) -> bool {
        self.relative_residual(a) < tol
    }

    /// Largest relative residual of `other`'s elements projected onto `self`.
    pub fn subspace_distance(&self, other: &LieBasis) -> f64 {
        other
            .elements
            .iter()
            .map(|e| self.relative_residual(e))
            .fold(0.0, f64::max)
    }
}

fn validate(generators: &[CMatrix]) -> Result<usize> {
    let first = generators.first().ok_or(Error::EmptyInput)?;
    let n = linalg::check_square(first)?;
    for g in generators {
        let m = linalg::check_square(g)?;
        if m != n {
            return Err(Error::DimensionMismatch(n, m));
        }
        let scale = linalg::max_abs(g).max(1.0);
        let d = linalg::skew_defect(g);
        if d > 1e-10 * scale {
            return Err(Error::NotSkewHermitian(d));
        }
    }
    Ok(n)
}

/// Smallest real Lie algebra containing `generators`.
///
/// FIFO queue seeded with the generators in order; each candidate is
/// Gram-Schmidt reduced against the basis (two passes) and kept if its
/// residual exceeds `rank_tol` times its own norm, in which case its
/// commutators with every existing basis element are enqueued.
pub fn closure(generators: &[CMatrix], rank_tol: f64) -> Result<LieBasis> {
    let n = validate(generators)?;
    let cap = n * n;
    let mut basis = LieBasis {
        elements: Vec::new(),
        residual_history: Vec::new(),
        n,
    };
    let mut queue: VecDeque<CMatrix> = generators.iter().cloned().collect();
    while let Some(cand) = queue.pop_front() {
        if basis.dim() == cap {
            break;
        }
        let norm = linalg::hs_norm(&cand);
        if norm == 0.0 {
            basis.residual_history.push(0.0);
            continue;
        }
        let r = basis.residual(&basis.residual(&cand));
        let rn = linalg::hs_norm(&r);
        basis.residual_history.push(rn / norm);
        if rn > rank_tol * norm {
            let e = r * C64::new(1.0 / rn, 0.0);
            for b in &basis.elements {
                queue.push_back(linalg::commutator(&e, b));
            }
            basis.elements.push(e);
        }
    }
    Ok(basis)
}

/// Operator-level convenience wrapper around [`closure`].
pub fn closure_of(generators: &[OperatorMatrix], rank_tol: f64) -> Result<LieBasis> {
    let mats: Vec<CMatrix> = generators.iter().map(|g| g.entries.clone()).collect();
    closure(&mats, rank_tol)
}

/// Traceless generators reach all of SU(N) iff the algebra has dimension N²-1.
pub fn is_fully_controllable(basis: &LieBasis, n: usize) -> bool {
    basis.dim() == n * n - 1
}
