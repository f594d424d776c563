//! Exact Gaussian-rational matrices for bookkeeping the commutator cascades.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::linalg::{CMatrix, C64};

pub type Q = Rational64;
pub type QI = Complex<Q>;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

/// Dense square matrix over `Q(i)`.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    n: usize,
    data: Vec<QI>,
}

impl ExactMatrix {
    pub fn zeros(n: usize) -> Self {
        ExactMatrix {
            n,
            data: vec![QI::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> QI {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: QI) {
        self.data[r * self.n + c] = v;
    }

    /// `E_pq` (0-based).
    pub fn unit(n: usize, p: usize, c: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(p, c, QI::one());
        m
    }

    /// `E_pq - E_qp`.
    pub fn real_pair(n: usize, p: usize, c: usize) -> Self {
        Self::unit(n, p, c) - Self::unit(n, c, p)
    }

    /// `i (E_pq + E_qp)`.
    pub fn imag_pair(n: usize, p: usize, c: usize) -> Self {
        (Self::unit(n, p, c) + Self::unit(n, c, p)).times_i()
    }

    /// `i (E_pp - E_qq)`.
    pub fn diag_pair(n: usize, p: usize, c: usize) -> Self {
        (Self::unit(n, p, p) - Self::unit(n, c, c)).times_i()
    }

    pub fn diagonal_signs(signs: &[i8]) -> Self {
        let mut m = Self::zeros(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            m.set(i, i, QI::new(q(s as i64), Q::zero()));
        }
        m
    }

    pub fn scale(&self, s: Q) -> Self {
        ExactMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * QI::new(s, Q::zero())).collect(),
        }
    }

    pub fn times_i(&self) -> Self {
        ExactMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * QI::i()).collect(),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `D A D` for a diagonal ±1 matrix `D`.
    pub fn sign_conjugate(&self, signs: &[i8]) -> Self {
        assert_eq!(signs.len(), self.n);
        let mut out = self.clone();
        for r in 0..self.n {
            for c in 0..self.n {
                if signs[r] != signs[c] {
                    let v = out.get(r, c);
                    out.set(r, c, -v);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let f = |x: Q| *x.numer() as f64 / *x.denom() as f64;
        CMatrix::from_fn(self.n, self.n, |r, c| {
            let v = self.get(r, c);
            C64::new(f(v.re), f(v.im))
        })
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn support(&self) -> Vec<(usize, usize, QI)> {
        let mut out = vec![];
        for r in 0..self.n {
            for c in 0..self.n {
                let v = self.get(r, c);
                if !v.is_zero() {
                    out.push((r, c, v));
                }
            }
        }
        out
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactMatrix[{}](", self.n)?;
        for (r, c, v) in self.support() {
            write!(f, " ({r},{c})={}+{}i", v.re, v.im)?;
        }
        write!(f, " )")
    }
}

impl Add for &ExactMatrix {
    type Output = ExactMatrix;
    fn add(self, o: Self) -> ExactMatrix {
        assert_eq!(self.n, o.n);
        ExactMatrix {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ExactMatrix {
    type Output = ExactMatrix;
    fn sub(self, o: Self) -> ExactMatrix {
        assert_eq!(self.n, o.n);
        ExactMatrix {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Add for ExactMatrix {
    type Output = ExactMatrix;
    fn add(self, o: Self) -> ExactMatrix {
        &self + &o
    }
}

impl Sub for ExactMatrix {
    type Output = ExactMatrix;
    fn sub(self, o: Self) -> ExactMatrix {
        &self - &o
    }
}

impl Neg for &ExactMatrix {
    type Output = ExactMatrix;
    fn neg(self) -> ExactMatrix {
        self.scale(q(-1))
    }
}

impl Mul for &ExactMatrix {
    type Output = ExactMatrix;
    fn mul(self, o: Self) -> ExactMatrix {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut out = ExactMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = o.get(k, c);
                    if !b.is_zero() {
                        out.data[r * n + c] += a * b;
                    }
                }
            }
        }
        out
    }
}
