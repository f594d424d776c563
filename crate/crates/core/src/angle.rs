//! Precise reduction of red-sideband rotation angles.
//!
//! A restricted red pulse with integer `k` rotates the bond at phonon level
//! `p` by `k π √(p / (m+1))`. For `k` in the millions a naive `f64` product
//! loses ~1e-9 rad, enough to break the subspace-closure guarantee at the
//! boundary. The ratio is therefore carried as an unevaluated sum of two
//! doubles and the product is reduced modulo 2 before multiplying by π.

use std::f64::consts::PI;

/// `√(p / q)` as `hi + lo` with roughly 100 bits of precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtRatio {
    hi: f64,
    lo: f64,
    /// Exact when `p/q` is a perfect square ratio.
    exact_integer: Option<u64>,
}

impl SqrtRatio {
    pub fn new(p: u64, q: u64) -> Self {
        assert!(q > 0, "denominator must be positive");
        if p.is_multiple_of(q) {
            let r = p / q;
            let s = crate::arithmetic::isqrt(r);
            if s * s == r {
                return SqrtRatio {
                    hi: s as f64,
                    lo: 0.0,
                    exact_integer: Some(s),
                };
            }
        }
        let (pf, qf) = (p as f64, q as f64);
        // quotient as double-double
        let q_hi = pf / qf;
        let q_lo = (-q_hi).mul_add(qf, pf) / qf;
        let r_hi = q_hi.sqrt();
        // residual (q_hi + q_lo) - r_hi^2, with r_hi^2 split exactly
        let sq = r_hi * r_hi;
        let sq_err = r_hi.mul_add(r_hi, -sq);
        let resid = (q_hi - sq) - sq_err + q_lo;
        let r_lo = resid / (2.0 * r_hi);
        SqrtRatio {
            hi: r_hi,
            lo: r_lo,
            exact_integer: None,
        }
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// `k · √(p/q)` reduced into `(-1, 1]`, i.e. the angle in units of π
    /// modulo 2.
    pub fn turns_mod2(&self, k: u64) -> f64 {
        if let Some(s) = self.exact_integer {
            let r = ((k % 2) * (s % 2)) % 2;
            return r as f64;
        }
        let kf = k as f64;
        debug_assert!(k < (1u64 << 53));
        let prod = kf * self.hi;
        let prod_err = kf.mul_add(self.hi, -prod);
        let tail = prod_err + kf * self.lo;
        let n = 2.0 * (prod / 2.0).round();
        let mut x = (prod - n) + tail;
        if x <= -1.0 {
            x += 2.0;
        } else if x > 1.0 {
            x -= 2.0;
        }
        x
    }

    /// `k π √(p/q)` reduced to `(-π, π]`.
    pub fn angle(&self, k: u64) -> f64 {
        PI * self.turns_mod2(k)
    }
}

/// Reduce an arbitrary angle into `(-π, π]`.
pub fn reduce(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut x = theta.rem_euclid(two_pi);
    if x > PI {
        x -= two_pi;
    }
    x
}

/// Absolute angular distance on the circle, in `[0, π]`.
pub fn distance(a: f64, b: f64) -> f64 {
    reduce(a - b).abs()
}

/// Operator-norm distance between two planar rotations differing by `delta`.
pub fn chord(delta: f64) -> f64 {
    2.0 * (0.5 * reduce(delta)).sin().abs()
}
