//! Pulse-level realization of unitaries on the controlled subspace.
//!
//! A [`Realization`] pairs a pulse sequence with the ideal unitary it
//! approximates and an operator-norm bound on the difference. Exact pieces
//! (carrier pulses, products of commuting exponentials, conjugations by
//! sign flips) compose without error; the only approximation enters through
//! restricted red pulses whose angles are found by [`find_k`](crate::arithmetic::find_k),
//! plus splitting errors where non-commuting generators are combined.
//!
//! Bonds are indexed as in [`crate::model`]: carrier bond `l` joins
//! `(2l, 2l+1)`, red bond `p` joins `(2p-1, 2p)`.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::angle::{self, SqrtRatio};
use crate::arithmetic::{isqrt, partition_groups, verify_irrationality, GroupPartition, KSearch, KSearchResult, Parity};
use crate::cache::KCache;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{bond_rotation, carrier_bond, red_bond, ControlPulse};

/// Allowance added per pulse to cover floating-point roundoff in simulation.
pub const ROUNDOFF_PER_PULSE: f64 = 1e-14;
const MIN_EPSILON: f64 = 1e-10;
/// Internal consistency threshold between composed and closed-form ideals.
const IDEAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Realization {
    /// Application order: `pulses[0]` acts first.
    pub pulses: Vec<ControlPulse>,
    /// Target unitary on the controlled subspace.
    pub ideal: CMatrix,
    /// Bound on `‖achieved − ideal‖` in operator norm, before roundoff.
    pub error_bound: f64,
}

impl Realization {
    pub fn identity(n: usize) -> Self {
        Realization {
            pulses: vec![],
            ideal: linalg::identity(n),
            error_bound: 0.0,
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Realization) -> Realization {
        let mut pulses = self.pulses.clone();
        pulses.extend_from_slice(&next.pulses);
        Realization {
            pulses,
            ideal: &next.ideal * &self.ideal,
            error_bound: self.error_bound + next.error_bound,
        }
    }

    /// Reverse order with every pulse mirrored; an exact inverse.
    pub fn inverse(&self) -> Realization {
        Realization {
            pulses: self.pulses.iter().rev().map(ControlPulse::mirror).collect(),
            ideal: self.ideal.adjoint(),
            error_bound: self.error_bound,
        }
    }

    pub fn repeat(&self, times: usize) -> Realization {
        let mut out = Realization::identity(self.ideal.nrows());
        for _ in 0..times {
            out = out.then(self);
        }
        out
    }

    /// `error_bound` plus the per-pulse roundoff allowance.
    pub fn certified_bound(&self) -> f64 {
        self.error_bound + ROUNDOFF_PER_PULSE * (self.pulses.len() as f64 + 1.0)
    }

    fn retarget(self, ideal: CMatrix, extra: f64) -> Realization {
        Realization {
            pulses: self.pulses,
            ideal,
            error_bound: self.error_bound + extra,
        }
    }
}

/// A restricted red pulse used as a sign flip: levels of `core` with odd
/// `q` rotate by ≈π (a `-1` on both endpoints), everything else by ≈0, and
/// the boundary state `|↑⟩|m⟩` changes sign iff `parity` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipSpec {
    pub core: Option<u64>,
    pub parity: Parity,
}

/// `sin`/`cos` that are exact at multiples of π/2.
fn sin_cos_exact(a: f64) -> (f64, f64) {
    if a == 0.0 {
        (0.0, 1.0)
    } else if a == PI || a == -PI {
        (0.0, -1.0)
    } else if a == FRAC_PI_2 {
        (1.0, 0.0)
    } else if a == -FRAC_PI_2 {
        (-1.0, 0.0)
    } else {
        a.sin_cos()
    }
}

/// Write `exp(a B(φ))` on bond `(lo, hi)` into `u`, which must be the identity there.
fn put_rotation(u: &mut CMatrix, lo: usize, hi: usize, a: f64, phi: f64) {
    let (s, co) = sin_cos_exact(a);
    let b = bond_rotation(co, s, phi);
    u[(lo, lo)] = b[0][0];
    u[(lo, hi)] = b[0][1];
    u[(hi, lo)] = b[1][0];
    u[(hi, hi)] = b[1][1];
}

/// Bond generator `i e^{iφ} E_{hi,lo} + i e^{-iφ} E_{lo,hi}`.
pub fn bond_generator(n: usize, lo: usize, hi: usize, phi: f64) -> CMatrix {
    let mut g = linalg::zeros(n);
    g[(hi, lo)] = linalg::I * linalg::cis(phi);
    g[(lo, hi)] = linalg::I * linalg::cis(-phi);
    g
}

/// `exp(a B(φ))` on bond `(lo, hi)`, identity elsewhere.
pub fn bond_unitary(n: usize, lo: usize, hi: usize, phi: f64, a: f64) -> CMatrix {
    let mut u = linalg::identity(n);
    put_rotation(&mut u, lo, hi, a, phi);
    u
}

/// `exp(a · i(E_pp − E_qq))`.
pub fn diag_unitary(n: usize, p: usize, q: usize, a: f64) -> CMatrix {
    let mut u = linalg::identity(n);
    u[(p, p)] = C64::from_polar(1.0, a);
    u[(q, q)] = C64::from_polar(1.0, -a);
    u
}

/// Shared state for building realizations at one cutoff.
#[derive(Debug, Clone)]
pub struct Context {
    m: usize,
    partition: GroupPartition,
    k_max: u64,
    cache: Arc<KCache>,
}

impl Context {
    pub fn new(m: usize, k_max: u64, cache: Arc<KCache>) -> Result<Self> {
        if m == 0 || !verify_irrationality(m as u64) {
            return Err(Error::InvalidSubspace(m as u64));
        }
        Ok(Context {
            m,
            partition: partition_groups(m as u64)?,
            k_max,
            cache,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Controlled dimension `2(m+1)`.
    pub fn n(&self) -> usize {
        2 * (self.m + 1)
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn cache(&self) -> &KCache {
        &self.cache
    }

    pub fn search(&self, core: Option<u64>, target: f64, epsilon: f64, parity: Parity) -> Result<KSearchResult> {
        let req = KSearch {
            m: self.m as u64,
            target_core: core,
            target_angle: angle::reduce(target),
            epsilon,
            k_max: self.k_max,
            parity,
        };
        self.cache.find_k(&req)
    }

    /// Exact carrier exponential `exp(angle · H_carrier(φ))`.
    pub fn carrier(&self, phi: f64, angle: f64) -> Realization {
        let n = self.n();
        if angle == 0.0 {
            return Realization::identity(n);
        }
        let pulse = if angle > 0.0 {
            ControlPulse::carrier(angle, phi)
        } else {
            ControlPulse::carrier(-angle, phi + PI)
        };
        let mut ideal = linalg::identity(n);
        for l in 0..=self.m {
            let (lo, hi) = carrier_bond(l);
            put_rotation(&mut ideal, lo, hi, angle, phi);
        }
        Realization {
            pulses: vec![pulse],
            ideal,
            error_bound: 0.0,
        }
    }

    /// Restricted red pulse with index `k`, scored against ideal red-bond
    /// angles (`ideal_angles[p-1]` for bond `p`) and boundary sign.
    pub fn red_from_k(&self, k: u64, phi: f64, ideal_angles: &[f64], boundary: i8) -> Realization {
        let n = self.n();
        let denom = self.m as u64 + 1;
        let mut ideal = linalg::identity(n);
        let mut bound = 0.0;
        for p in 1..=self.m {
            let target = ideal_angles[p - 1];
            let got = SqrtRatio::new(p as u64, denom).angle(k);
            bound += angle::chord(got - target);
            let (lo, hi) = red_bond(p);
            put_rotation(&mut ideal, lo, hi, target, phi);
        }
        let achieved_sign: i8 = if k.is_multiple_of(2) { 1 } else { -1 };
        if achieved_sign != boundary {
            bound += 2.0;
        }
        ideal[(n - 1, n - 1)] = C64::new(boundary as f64, 0.0);
        Realization {
            pulses: vec![ControlPulse::red_restricted(self.m, k, phi)],
            ideal,
            error_bound: bound,
        }
    }

    fn q_of(&self, p: u64, core: u64) -> u64 {
        isqrt(p / core)
    }

    /// `exp(α Σ_{j∈G_c} q_j B_j(φ))` with `j = c q_j²`: the group
    /// generator of `core` normalized so the core level rotates by `α`.
    pub fn group(&self, core: u64, phi: f64, alpha: f64, epsilon: f64, parity: Parity) -> Result<Realization> {
        if alpha == 0.0 && parity != Parity::Odd {
            return Ok(Realization::identity(self.n()));
        }
        let r = self.search(Some(core), alpha, epsilon, parity)?;
        let ideal: Vec<f64> = (1..=self.m as u64)
            .map(|p| {
                if self.partition.core_of(p) == core {
                    self.q_of(p, core) as f64 * alpha
                } else {
                    0.0
                }
            })
            .collect();
        let boundary = if r.k % 2 == 0 { 1 } else { -1 };
        Ok(self.red_from_k(r.k, phi, &ideal, boundary))
    }

    /// Red-bond indices rotated by π under `spec`.
    fn flip_bonds(&self, spec: FlipSpec) -> Vec<u64> {
        match spec.core {
            None => vec![],
            Some(c) => self
                .partition
                .members(c)
                .unwrap_or(&[])
                .iter()
                .copied()
                .filter(|&p| self.q_of(p, c) % 2 == 1)
                .collect(),
        }
    }

    /// Diagonal signs of the ideal flip on the controlled subspace.
    pub fn flip_signs(&self, spec: FlipSpec) -> Vec<i8> {
        let mut s = vec![1i8; self.n()];
        for p in self.flip_bonds(spec) {
            let (lo, hi) = red_bond(p as usize);
            s[lo] = -s[lo];
            s[hi] = -s[hi];
        }
        if spec.parity == Parity::Odd {
            let last = self.n() - 1;
            s[last] = -s[last];
        }
        s
    }

    /// Carrier bonds whose endpoints get opposite signs under `spec`.
    pub fn flipped_carrier_bonds(&self, spec: FlipSpec) -> BTreeSet<usize> {
        let s = self.flip_signs(spec);
        (0..=self.m)
            .filter(|&l| {
                let (lo, hi) = carrier_bond(l);
                s[lo] != s[hi]
            })
            .collect()
    }

    pub fn flip(&self, spec: FlipSpec, epsilon: f64) -> Result<Realization> {
        if spec.parity == Parity::Any {
            return Err(Error::InvalidArgument("a flip needs a definite parity".into()));
        }
        let r = self.search(spec.core, PI, epsilon, spec.parity)?;
        let flipped = self.flip_bonds(spec);
        let ideal: Vec<f64> = (1..=self.m as u64)
            .map(|p| if flipped.contains(&p) { PI } else { 0.0 })
            .collect();
        let boundary = if spec.parity == Parity::Odd { -1 } else { 1 };
        Ok(self.red_from_k(r.k, 0.0, &ideal, boundary))
    }
}

/// One step of the carrier-bond isolation: conjugate by the flip and keep
/// either the flipped or the unflipped half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Halving {
    pub flip: FlipSpec,
    pub keep_flipped: bool,
}

/// `exp(a F)` or `exp(a U)` from `G = F + U` where the flip `D` negates `F`
/// and fixes `U`: `exp(a/2 G) · D exp(∓a/2 G) D`. Exact because `G` and
/// `DGD` commute.
fn halve(d: &Realization, full: &Realization, conj: &Realization) -> Realization {
    d.then(conj).then(d).then(full)
}

impl Context {
    fn flip_candidates(&self) -> Vec<FlipSpec> {
        let mut out = vec![FlipSpec {
            core: None,
            parity: Parity::Odd,
        }];
        for &c in self.partition.groups.keys() {
            for parity in [Parity::Even, Parity::Odd] {
                out.push(FlipSpec { core: Some(c), parity });
            }
        }
        out
    }

    /// Greedy sequence of halvings that cuts the full carrier down to bond `l`.
    pub fn carrier_plan(&self, l: usize) -> Result<Vec<Halving>> {
        if l > self.m {
            return Err(Error::InvalidArgument(format!("carrier bond {l} beyond cutoff {}", self.m)));
        }
        let cands: Vec<(FlipSpec, BTreeSet<usize>)> = self
            .flip_candidates()
            .into_iter()
            .map(|s| (s, self.flipped_carrier_bonds(s)))
            .collect();
        let mut set: BTreeSet<usize> = (0..=self.m).collect();
        let mut plan = vec![];
        while set.len() > 1 {
            let mut best: Option<(usize, Halving, BTreeSet<usize>)> = None;
            for (spec, f) in &cands {
                let keep = f.contains(&l);
                let next: BTreeSet<usize> = set.iter().copied().filter(|b| f.contains(b) == keep).collect();
                if next.len() < set.len() && best.as_ref().is_none_or(|b| next.len() < b.0) {
                    let h = Halving {
                        flip: *spec,
                        keep_flipped: keep,
                    };
                    best = Some((next.len(), h, next));
                }
            }
            let Some((_, h, next)) = best else {
                return Err(Error::NotIsolable(format!("carrier bond {l} at cutoff {}", self.m)));
            };
            plan.push(h);
            set = next;
        }
        Ok(plan)
    }

    fn carrier_partial(&self, plan: &[Halving], phi: f64, angle: f64, epsilon: f64) -> Result<Realization> {
        let Some((last, rest)) = plan.split_last() else {
            return Ok(self.carrier(phi, angle));
        };
        let d = self.flip(last.flip, epsilon)?;
        let full = self.carrier_partial(rest, phi, angle / 2.0, epsilon)?;
        let sign = if last.keep_flipped { -1.0 } else { 1.0 };
        let conj = self.carrier_partial(rest, phi, sign * angle / 2.0, epsilon)?;
        Ok(halve(&d, &full, &conj))
    }

    /// `exp(angle · B(φ))` on carrier bond `l` alone.
    pub fn carrier_bond(&self, l: usize, phi: f64, angle: f64, epsilon: f64) -> Result<Realization> {
        let plan = self.carrier_plan(l)?;
        self.carrier_partial(&plan, phi, angle, epsilon)
    }

    /// `exp(angle · B(φ))` on red bond `p` alone.
    pub fn red_bond(&self, p: usize, phi: f64, angle: f64, epsilon: f64) -> Result<Realization> {
        if p == 0 || p > self.m {
            return Err(Error::InvalidArgument(format!("red bond {p} outside 1..={}", self.m)));
        }
        let c = self.partition.core_of(p as u64);
        let q = self.q_of(p as u64, c) as f64;
        if self.partition.is_singleton(p as u64) {
            return self.group(c, phi, angle, epsilon, Parity::Even);
        }
        // The carrier block at level p negates red bonds p and p+1, and no
        // other member of p's group is adjacent to it.
        let d = self.carrier_bond(p, 0.0, PI, epsilon)?;
        let alpha = angle / q;
        let full = self.group(c, phi, alpha / 2.0, epsilon, Parity::Even)?;
        let conj = self.group(c, phi, -alpha / 2.0, epsilon, Parity::Even)?;
        Ok(halve(&d, &full, &conj))
    }

    /// `exp(angle · B(φ))` on the adjacent pair `(i, i+1)`.
    pub fn adjacent(&self, i: usize, phi: f64, angle: f64, epsilon: f64) -> Result<Realization> {
        let n = self.n();
        if i + 1 >= n {
            return Err(Error::InvalidArgument(format!("pair ({i}, {}) outside dimension {n}", i + 1)));
        }
        if angle == 0.0 {
            return Ok(Realization::identity(n));
        }
        let r = if i.is_multiple_of(2) {
            self.carrier_bond(i / 2, phi, angle, epsilon)?
        } else {
            self.red_bond(i.div_ceil(2), phi, angle, epsilon)?
        };
        self.check_ideal(&r, &bond_unitary(n, i, i + 1, phi, angle), "adjacent")?;
        Ok(r)
    }

    /// `exp(angle · i(E_ii − E_{i+1,i+1}))` as a conjugated `Y` rotation:
    /// `e^{π/4 X} Y e^{-π/4 X} = −Z` on the pair.
    pub fn adjacent_z(&self, i: usize, angle: f64, epsilon: f64) -> Result<Realization> {
        let n = self.n();
        if angle == 0.0 {
            return Ok(Realization::identity(n));
        }
        let v = self.adjacent(i, 0.0, FRAC_PI_4, epsilon)?;
        let inner = self.adjacent(i, FRAC_PI_2, -angle, epsilon)?;
        let r = conjugate(&v, &inner);
        self.check_ideal(&r, &diag_unitary(n, i, i + 1, angle), "adjacent_z")?;
        Ok(r)
    }

    fn check_ideal(&self, r: &Realization, want: &CMatrix, what: &str) -> Result<()> {
        let d = linalg::max_abs(&(&r.ideal - want));
        if d > IDEAL_TOL {
            return Err(Error::Malformed(format!("{what}: composed ideal deviates by {d:.3e}")));
        }
        Ok(())
    }
}

/// `V · inner · V†`, applied as `V†`, then `inner`, then `V`.
pub fn conjugate(v: &Realization, inner: &Realization) -> Realization {
    v.inverse().then(inner).then(v)
}

/// Build with a shrinking search tolerance until the certified bound fits
/// `budget`.
pub fn realize_within(
    budget: f64,
    epsilon0: f64,
    mut build: impl FnMut(f64) -> Result<Realization>,
) -> Result<Realization> {
    let mut eps = epsilon0.min(1.0);
    loop {
        let r = build(eps)?;
        if r.certified_bound() <= budget {
            return Ok(r);
        }
        eps /= 2.0;
        if eps < MIN_EPSILON {
            return Err(Error::BudgetExhausted(format!(
                "search tolerance fell below {MIN_EPSILON:e} before the bound reached {budget:e}"
            )));
        }
    }
}

pub type Realizer<'a> = dyn Fn(f64) -> Result<Realization> + 'a;

/// Symmetric Strang splitting for `exp(t (A + B))`, doubling the step count
/// until the splitting bound
/// `n (t/n)³ (‖[B,[B,A]]‖/12 + ‖[A,[A,B]]‖/24)` is at most `tol`.
pub fn trotter(
    ra: &Realizer,
    rb: &Realizer,
    ga: &CMatrix,
    gb: &CMatrix,
    t: f64,
    tol: f64,
    max_steps: usize,
) -> Result<(Realization, usize)> {
    let bba = linalg::commutator(gb, &linalg::commutator(gb, ga));
    let aab = linalg::commutator(ga, &linalg::commutator(ga, gb));
    let c3 = linalg::op_norm(&bba) / 12.0 + linalg::op_norm(&aab) / 24.0;
    let split = |n: usize| n as f64 * (t.abs() / n as f64).powi(3) * c3;
    let mut n = 1;
    while split(n) > tol {
        n *= 2;
        if n > max_steps {
            return Err(Error::BudgetExhausted(format!(
                "splitting needs more than {max_steps} steps for tolerance {tol:e}"
            )));
        }
    }
    let h = t / n as f64;
    let half = ra(h / 2.0)?;
    let step = half.then(&rb(h)?).then(&half);
    let target = linalg::expm_skew(&(ga + gb), t);
    Ok((step.repeat(n).retarget(target, split(n)), n))
}

/// Group commutator `(e^{As} e^{Bs} e^{-As} e^{-Bs})^n` with `n s² = |t|`
/// for `exp(t [A, B])`, doubling `n` until the numerically evaluated
/// per-step defect times `n` is at most `tol`.
pub fn bracket(
    ra: &Realizer,
    rb: &Realizer,
    ga: &CMatrix,
    gb: &CMatrix,
    t: f64,
    tol: f64,
    max_steps: usize,
) -> Result<(Realization, usize)> {
    let (ra, rb, ga, gb) = if t < 0.0 { (rb, ra, gb, ga) } else { (ra, rb, ga, gb) };
    let t = t.abs();
    let comm = linalg::commutator(ga, gb);
    let defect = |n: usize| {
        let s = (t / n as f64).sqrt();
        let p = linalg::expm_skew(ga, s) * linalg::expm_skew(gb, s) * linalg::expm_skew(ga, -s) * linalg::expm_skew(gb, -s);
        n as f64 * linalg::op_norm(&(p - linalg::expm_skew(&comm, s * s)))
    };
    let mut n = 1;
    while defect(n) > tol {
        n *= 2;
        if n > max_steps {
            return Err(Error::BudgetExhausted(format!(
                "group commutator needs more than {max_steps} steps for tolerance {tol:e}"
            )));
        }
    }
    let s = (t / n as f64).sqrt();
    let step = rb(-s)?.then(&ra(-s)?).then(&rb(s)?).then(&ra(s)?);
    let target = linalg::expm_skew(&comm, t);
    Ok((step.repeat(n).retarget(target, defect(n)), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::measured_error;

    fn ctx(m: usize) -> Context {
        Context::new(m, 10_000_000, Arc::new(KCache::in_memory())).unwrap()
    }

    fn assert_sound(c: &Context, r: &Realization) {
        let e = measured_error(&r.pulses, &r.ideal, c.m()).unwrap();
        assert!(e <= r.certified_bound(), "measured {e:e} > bound {:e}", r.certified_bound());
    }

    #[test]
    fn carrier_plan_at_four_levels_uses_boundary_flip() {
        let c = ctx(1);
        let boundary = FlipSpec { core: None, parity: Parity::Odd };
        assert_eq!(c.carrier_plan(1).unwrap(), vec![Halving { flip: boundary, keep_flipped: true }]);
        assert_eq!(c.carrier_plan(0).unwrap(), vec![Halving { flip: boundary, keep_flipped: false }]);
    }

    #[test]
    fn every_carrier_bond_isolable_at_m4() {
        let c = ctx(4);
        for l in 0..=4 {
            let plan = c.carrier_plan(l).unwrap();
            assert!(!plan.is_empty() && plan.len() <= 3, "bond {l}: {plan:?}");
        }
    }

    #[test]
    fn flip_signs_match_red_bonds() {
        let c = ctx(4);
        let s = c.flip_signs(FlipSpec { core: Some(1), parity: Parity::Even });
        // core 1 = {1, 4}; only q = 1 is odd, so red bond 1 = (1, 2) flips
        assert_eq!(s, vec![1, -1, -1, 1, 1, 1, 1, 1, 1, 1]);
        let f = c.flipped_carrier_bonds(FlipSpec { core: Some(3), parity: Parity::Odd });
        assert_eq!(f.into_iter().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn adjacent_rotations_are_sound_at_m1() {
        let c = ctx(1);
        for i in 0..3 {
            for (phi, a) in [(0.0, 0.9), (FRAC_PI_2, -1.7), (0.4, 2.5)] {
                let r = c.adjacent(i, phi, a, 1e-3).unwrap();
                assert!(r.certified_bound() < 0.02);
                assert_sound(&c, &r);
            }
            let z = c.adjacent_z(i, 0.6, 1e-3).unwrap();
            assert_sound(&c, &z);
        }
    }

    #[test]
    fn adjacent_rotations_are_sound_at_m4() {
        let c = ctx(4);
        // pairs 7 (red bond 4, core 1 shared with level 1) and 8 (top carrier bond)
        for i in [0, 3, 7, 8] {
            let r = c.adjacent(i, FRAC_PI_2, 0.8, 0.2).unwrap();
            assert_sound(&c, &r);
        }
    }

    #[test]
    fn inverse_undoes_exactly() {
        let c = ctx(1);
        let r = c.adjacent(1, 0.3, 1.1, 1e-2).unwrap();
        let both = r.then(&r.inverse());
        let u = crate::simulator::controlled_block(&both.pulses, 1, 1).unwrap();
        assert!(linalg::max_abs(&(u - linalg::identity(4))) < 1e-12);
    }

    #[test]
    fn realize_within_meets_budget() {
        let c = ctx(1);
        let r = realize_within(1e-4, 1e-4, |eps| c.adjacent(2, 0.0, 0.5, eps)).unwrap();
        assert!(r.certified_bound() <= 1e-4);
        assert_sound(&c, &r);
    }

    #[test]
    fn trotter_and_bracket_are_sound() {
        let c = ctx(1);
        let n = c.n();
        let ga = bond_generator(n, 0, 1, FRAC_PI_2);
        let gb = bond_generator(n, 1, 2, 0.0);
        let ra = |t: f64| c.adjacent(0, FRAC_PI_2, t, 1e-3);
        let rb = |t: f64| c.adjacent(1, 0.0, t, 1e-3);
        let (r, steps) = trotter(&ra, &rb, &ga, &gb, 0.7, 1e-2, 1 << 12).unwrap();
        assert!(steps >= 1);
        assert_sound(&c, &r);
        let (r, _) = bracket(&ra, &rb, &ga, &gb, -0.4, 5e-2, 1 << 12).unwrap();
        let want = linalg::expm_skew(&linalg::commutator(&ga, &gb), -0.4);
        assert!(linalg::max_abs(&(&r.ideal - want)) < 1e-12);
        assert_sound(&c, &r);
    }

    #[test]
    fn rejects_invalid_cutoff() {
        assert!(matches!(
            Context::new(3, 10, Arc::new(KCache::in_memory())),
            Err(Error::InvalidSubspace(3))
        ));
    }
}
