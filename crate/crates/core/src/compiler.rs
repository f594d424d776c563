//! Compilation of target unitaries into carrier and restricted red pulses.
//!
//! The target is reduced to SU(N), factored into two-level rotations on
//! adjacent basis pairs, and each factor is written as
//! `e^{aY} e^{bX} e^{cZ}` on its pair. Every exponential is realized by
//! [`Context::adjacent`] / [`Context::adjacent_z`] within an even share of the
//! error budget; the predicted fidelity is `1 − Σ bounds`, which is sound
//! because `|tr(U†V)|/N ≥ 1 − ‖U − V‖`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::SqrtRatio;
use crate::arithmetic::DEFAULT_K_MAX;
use crate::cache::KCache;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{red_bond, ControlPulse, TruncatedSpace};
use crate::realize::{realize_within, Context, Realization};
use crate::simulator;

const ZERO_TOL: f64 = 1e-14;
const RECONSTRUCT_TOL: f64 = 1e-9;
const NATIVE_TOL: f64 = 1e-10;

/// `|tr(U†V)| / N`.
pub fn fidelity(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    let n = linalg::check_same_dim(u, v)?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(linalg::trace(&(u.adjoint() * v)).norm() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    /// Coefficient of `E_pq − E_qp`.
    pub y: f64,
    /// Coefficient of `i(E_pq + E_qp)`.
    pub x: f64,
    /// Coefficient of `i(E_pp − E_qq)`.
    pub z: f64,
}

/// SU(2) rotation on the pair `(p, q)`; `block` is its 2x2 action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoLevelFactor {
    pub p: usize,
    pub q: usize,
    #[serde(with = "linalg::json_matrix")]
    pub block: CMatrix,
    pub angles: EulerAngles,
}

impl TwoLevelFactor {
    pub fn embed(&self, n: usize) -> CMatrix {
        let mut u = linalg::identity(n);
        let idx = [self.p, self.q];
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                u[(r, c)] = self.block[(i, j)];
            }
        }
        u
    }
}

/// Angles with `F = e^{aY} e^{bX} e^{cZ}` for `F ∈ SU(2)`, where
/// `Y = [[0,1],[-1,0]]`, `X = [[0,i],[i,0]]`, `Z = diag(i,-i)`.
pub fn euler_angles(f: &CMatrix) -> EulerAngles {
    let (a_, b_) = (f[(0, 0)], f[(0, 1)]);
    // A·B = ½ sin 2a cos 2b + (i/2) sin 2b and |A|² − |B|² = cos 2a cos 2b.
    let ab = a_ * b_;
    let b = 0.5 * (2.0 * ab.im).clamp(-1.0, 1.0).asin();
    let a = 0.5 * (2.0 * ab.re).atan2(a_.norm_sqr() - b_.norm_sqr());
    let u = C64::new(a.cos() * b.cos(), a.sin() * b.sin());
    let v = C64::new(a.sin() * b.cos(), a.cos() * b.sin());
    let c = if u.norm() >= v.norm() {
        a_.arg() - u.arg()
    } else {
        v.arg() - b_.arg()
    };
    EulerAngles { y: a, x: b, z: c }
}

/// `e^{aY} e^{bX} e^{cZ}` as a 2x2 matrix.
pub fn euler_matrix(e: &EulerAngles) -> CMatrix {
    let (sa, ca) = e.y.sin_cos();
    let (sb, cb) = e.x.sin_cos();
    let y = CMatrix::from_row_slice(2, 2, &[C64::new(ca, 0.0), C64::new(sa, 0.0), C64::new(-sa, 0.0), C64::new(ca, 0.0)]);
    let x = CMatrix::from_row_slice(2, 2, &[C64::new(cb, 0.0), C64::new(0.0, sb), C64::new(0.0, sb), C64::new(cb, 0.0)]);
    let z = CMatrix::from_row_slice(
        2,
        2,
        &[C64::from_polar(1.0, e.z), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, -e.z)],
    );
    y * x * z
}

/// Givens reduction of `u ∈ SU(N)` on adjacent pairs.
///
/// Returns factors `F_1, …, F_K` (K ≤ N(N−1)/2) with `U = F_1 ··· F_K`,
/// so `F_K` acts first. Each elimination step uses an SU(2) rotation with a
/// positive real pivot, which leaves the identity once every column is done.
pub fn two_level_decompose(u: &CMatrix) -> Result<Vec<TwoLevelFactor>> {
    let n = linalg::check_square(u)?;
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    let det = u.determinant();
    if (det - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "two-level decomposition needs det 1, got {:.6}{:+.6}i",
            det.re, det.im
        )));
    }
    let mut w = u.clone();
    let mut gs: Vec<(usize, CMatrix)> = vec![];
    for col in 0..n.saturating_sub(1) {
        for r in (col + 1..n).rev() {
            let a = w[(r - 1, col)];
            let b = w[(r, col)];
            let last = r - 1 == col;
            if b.norm() <= ZERO_TOL && (!last || (a - C64::new(1.0, 0.0)).norm() <= ZERO_TOL) {
                continue;
            }
            let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g = CMatrix::from_row_slice(2, 2, &[a.conj() / nrm, b.conj() / nrm, -b / nrm, a / nrm]);
            for c in 0..n {
                let x = w[(r - 1, c)];
                let y = w[(r, c)];
                w[(r - 1, c)] = g[(0, 0)] * x + g[(0, 1)] * y;
                w[(r, c)] = g[(1, 0)] * x + g[(1, 1)] * y;
            }
            gs.push((r - 1, g));
        }
    }
    let factors: Vec<TwoLevelFactor> = gs
        .into_iter()
        .map(|(p, g)| {
            let block = g.adjoint();
            let angles = euler_angles(&block);
            TwoLevelFactor { p, q: p + 1, block, angles }
        })
        .collect();
    let rebuilt = factors.iter().fold(linalg::identity(n), |acc, f| acc * f.embed(n));
    let err = linalg::max_abs(&(rebuilt - u));
    if err > RECONSTRUCT_TOL {
        return Err(Error::Malformed(format!("two-level reconstruction error {err:.3e}")));
    }
    Ok(factors)
}

/// `u · e^{-iθ/N}` with `θ = arg det u`, and `θ/N`.
pub fn strip_global_phase(u: &CMatrix) -> (CMatrix, f64) {
    let n = u.nrows().max(1) as f64;
    let gamma = u.determinant().arg() / n;
    (u * C64::from_polar(1.0, -gamma), gamma)
}

/// `‖target − e^{iγ} cand‖_max` minimized over the global phase.
fn phase_aligned_distance(target: &CMatrix, cand: &CMatrix) -> f64 {
    let t = linalg::trace(&(cand.adjoint() * target));
    let ph = if t.norm() > 0.0 { t / t.norm() } else { C64::new(1.0, 0.0) };
    linalg::max_abs(&(target - cand * ph))
}

/// A single carrier or restricted red pulse reproducing `target` up to
/// global phase within `1e-10`, if one exists with `k ≤ k_max`.
pub fn native_pulse(target: &CMatrix, m: usize, k_max: u64) -> Option<ControlPulse> {
    let n = 2 * (m + 1);
    if target.nrows() != n || target.ncols() != n {
        return None;
    }
    let ctrl = |p: &ControlPulse| simulator::controlled_block(&[*p], m, 1).ok();
    // Carrier: read θ, φ off the lowest block.
    let (c0, s0) = (target[(0, 0)], target[(1, 0)]);
    let ph = if c0.norm() > 1e-12 { c0.conj() / c0.norm() } else { C64::new(1.0, 0.0) };
    let (co, si) = ((c0 * ph).re, s0 * ph * (-linalg::I));
    let theta = si.norm().atan2(co);
    let phi = if si.norm() > 1e-15 { si.arg() } else { 0.0 };
    let pulse = ControlPulse::carrier(theta, phi);
    if ctrl(&pulse).is_some_and(|u| phase_aligned_distance(target, &u) < NATIVE_TOL) {
        return Some(pulse);
    }
    // Restricted red: only scan when the support pattern fits.
    let mut pattern = linalg::identity(n);
    for p in 1..=m {
        let (lo, hi) = red_bond(p);
        pattern[(lo, hi)] = C64::new(1.0, 0.0);
        pattern[(hi, lo)] = C64::new(1.0, 0.0);
    }
    let off_support = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).any(|(r, c)| {
        pattern[(r, c)] == C64::new(0.0, 0.0) && target[(r, c)].norm() > NATIVE_TOL
    });
    if off_support || m == 0 || target[(0, 0)].norm() < 0.5 {
        return None;
    }
    let (lo, hi) = red_bond(1);
    let ph = target[(0, 0)].conj() / target[(0, 0)].norm();
    let s1 = target[(hi, lo)] * ph * (-linalg::I);
    let phi = if s1.norm() > 1e-15 { s1.arg() } else { 0.0 };
    let want: Vec<f64> = (1..=m)
        .map(|p| {
            let (lo, hi) = red_bond(p);
            let s = target[(hi, lo)] * ph * C64::from_polar(1.0, -phi) * (-linalg::I);
            s.re.atan2((target[(lo, lo)] * ph).re)
        })
        .collect();
    let boundary = (target[(n - 1, n - 1)] * ph).re;
    let ratios: Vec<SqrtRatio> = (1..=m).map(|p| SqrtRatio::new(p as u64, m as u64 + 1)).collect();
    let k = (0..=k_max).into_par_iter().find_first(|&k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        (sign - boundary).abs() < 1e-6
            && ratios
                .iter()
                .zip(&want)
                .all(|(r, &w)| crate::angle::distance(r.angle(k), w) < 1e-8)
    })?;
    let pulse = ControlPulse::red_restricted(m, k, phi);
    ctrl(&pulse).filter(|u| phase_aligned_distance(target, u) < NATIVE_TOL).map(|_| pulse)
}

/// Resource limits for a compilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub k_max: u64,
    pub max_pulses: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            k_max: DEFAULT_K_MAX,
            max_pulses: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompilationResult {
    pub pulses: Vec<ControlPulse>,
    pub predicted_fidelity: f64,
    pub pulse_count: usize,
    pub decomposition: Vec<TwoLevelFactor>,
    /// Certified error bound of each realized factor, in decomposition order.
    pub factor_errors: Vec<f64>,
    /// False when the budget ran out; `pulses` then holds the factors
    /// realized so far and `predicted_fidelity` is 0.
    pub complete: bool,
    pub failure: Option<String>,
    pub native: bool,
}

fn finish(pulses: Vec<ControlPulse>, decomposition: Vec<TwoLevelFactor>, factor_errors: Vec<f64>, native: bool) -> CompilationResult {
    let total: f64 = factor_errors.iter().sum();
    CompilationResult {
        pulse_count: pulses.len(),
        pulses,
        predicted_fidelity: (1.0 - total).max(0.0),
        decomposition,
        factor_errors,
        complete: true,
        failure: None,
        native,
    }
}

/// Realize one two-level factor on an adjacent pair within `budget`.
pub fn realize_factor(ctx: &Context, f: &TwoLevelFactor, budget: f64) -> Result<Realization> {
    if f.q != f.p + 1 {
        return Err(Error::InvalidArgument(format!("factor on non-adjacent pair ({}, {})", f.p, f.q)));
    }
    let share = budget / 3.0;
    let e = f.angles;
    let ez = realize_within(share, share, |eps| ctx.adjacent_z(f.p, e.z, eps))?;
    let ex = realize_within(share, share, |eps| ctx.adjacent(f.p, 0.0, e.x, eps))?;
    let ey = realize_within(share, share, |eps| ctx.adjacent(f.p, FRAC_PI_2, e.y, eps))?;
    Ok(ez.then(&ex).then(&ey))
}

/// Compile `target` (any unitary on the controlled subspace of cutoff `m`).
///
/// Budget exhaustion is reported in-band with `complete = false`; other
/// failures are errors.
pub fn compile(target: &CMatrix, m: usize, tolerance: f64, budget: Budget, cache: Arc<KCache>) -> Result<CompilationResult> {
    let n = 2 * (m + 1);
    let t = linalg::check_square(target)?;
    if t != n {
        return Err(Error::DimensionMismatch(n, t));
    }
    let defect = linalg::unitarity_defect(target);
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tolerance}")));
    }
    let (su, _) = strip_global_phase(target);
    if phase_aligned_distance(&su, &linalg::identity(n)) < NATIVE_TOL {
        return Ok(finish(vec![], vec![], vec![], true));
    }
    if let Some(p) = native_pulse(&su, m, budget.k_max) {
        return Ok(finish(vec![p], vec![], vec![0.0], true));
    }
    let ctx = Context::new(m, budget.k_max, cache)?;
    let factors = two_level_decompose(&su)?;
    let per_factor = tolerance / factors.len().max(1) as f64;
    let mut total = Realization::identity(n);
    let mut errors = vec![0.0; factors.len()];
    for (i, f) in factors.iter().enumerate().rev() {
        let r = match realize_factor(&ctx, f, per_factor) {
            Ok(r) => r,
            Err(e) if e.is_exhaustion() => return Ok(incomplete(total, factors, errors, e.to_string())),
            Err(e) => return Err(e),
        };
        errors[i] = r.certified_bound();
        total = total.then(&r);
        if total.pulses.len() > budget.max_pulses {
            let msg = format!("pulse count {} exceeds the budget of {}", total.pulses.len(), budget.max_pulses);
            return Ok(incomplete(total, factors, errors, msg));
        }
    }
    let err = phase_aligned_distance(&su, &total.ideal);
    if err > 1e-8 {
        return Err(Error::Malformed(format!("realized factors miss the target by {err:.3e}")));
    }
    Ok(finish(total.pulses, factors, errors, false))
}

fn incomplete(total: Realization, factors: Vec<TwoLevelFactor>, errors: Vec<f64>, msg: String) -> CompilationResult {
    let mut r = finish(total.pulses, factors, errors, false);
    r.complete = false;
    r.predicted_fidelity = 0.0;
    r.failure = Some(msg);
    r
}

/// True when every pulse is a carrier or a restricted red pulse consistent with `m`.
pub fn is_admissible(pulses: &[ControlPulse], m: usize) -> bool {
    let space = TruncatedSpace::buffered(m);
    pulses.iter().all(|p| match p.channel {
        crate::model::Channel::Carrier => p.theta >= 0.0,
        crate::model::Channel::Red => p.k.is_some() && crate::model::pulse_blocks(&space, p).is_ok(),
    })
}
