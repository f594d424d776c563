//! Number theory behind the general-cutoff construction: squarefree cores,
//! the partition of phonon levels into rationally locked groups, cutoff
//! selection rules, the integer-k angle search and compactness-based
//! approximate inversion.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{self, SqrtRatio};
use crate::error::{Error, KNotFound, Result};
use crate::linalg::{self, CMatrix};

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Product of the primes dividing `n` to an odd power.
pub fn squarefree_part(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("squarefree part of 0 is undefined".into()));
    }
    let mut n = n;
    let mut core = 1;
    let mut d = 2;
    while d * d <= n {
        let mut odd = false;
        while n.is_multiple_of(d) {
            n /= d;
            odd = !odd;
        }
        if odd {
            core *= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    Ok(core * n)
}

/// Levels `1..=m` grouped by squarefree core; `p₁, p₂` share a group iff
/// `√(p₁/p₂)` is rational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub m: u64,
    pub groups: BTreeMap<u64, Vec<u64>>,
}

impl GroupPartition {
    pub fn core_of(&self, p: u64) -> u64 {
        squarefree_part(p).expect("levels are positive")
    }

    pub fn members(&self, core: u64) -> Option<&[u64]> {
        self.groups.get(&core).map(|v| v.as_slice())
    }

    pub fn is_singleton(&self, p: u64) -> bool {
        self.members(self.core_of(p)).map(|g| g.len() == 1).unwrap_or(false)
    }
}

pub fn partition_groups(m: u64) -> Result<GroupPartition> {
    if m == 0 {
        return Err(Error::InvalidArgument("cutoff m must be at least 1".into()));
    }
    let mut groups: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for p in 1..=m {
        groups.entry(squarefree_part(p)?).or_default().push(p);
    }
    Ok(GroupPartition { m, groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SubspaceChoice {
    /// `(m-1, m+1)` are twin primes; `{m-1}` is a singleton group.
    ValidTwinPrime { lower: u64, upper: u64, singleton: u64 },
    /// `m+1 = 2q` with `q` an odd prime; `{q}` is a singleton group.
    Valid2q { q: u64, singleton: u64 },
    Invalid,
}

impl SubspaceChoice {
    pub fn singleton(&self) -> Option<u64> {
        match *self {
            SubspaceChoice::ValidTwinPrime { singleton, .. } | SubspaceChoice::Valid2q { singleton, .. } => {
                Some(singleton)
            }
            SubspaceChoice::Invalid => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self, SubspaceChoice::Invalid)
    }
}

pub fn select_subspace(m: u64) -> SubspaceChoice {
    if m < 2 {
        return SubspaceChoice::Invalid;
    }
    if is_prime(m - 1) && is_prime(m + 1) {
        return SubspaceChoice::ValidTwinPrime {
            lower: m - 1,
            upper: m + 1,
            singleton: m - 1,
        };
    }
    if (m + 1).is_multiple_of(2) {
        let q = m.div_ceil(2);
        if q % 2 == 1 && is_prime(q) {
            return SubspaceChoice::Valid2q { q, singleton: q };
        }
    }
    SubspaceChoice::Invalid
}

/// True iff `√(p/(m+1))` is irrational for every `p ≤ m`.
pub fn verify_irrationality(m: u64) -> bool {
    (1..=m).all(|p| !is_square(p * (m + 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Any,
    Even,
    Odd,
}

impl Parity {
    fn admits(self, k: u64) -> bool {
        match self {
            Parity::Any => true,
            Parity::Even => k.is_multiple_of(2),
            Parity::Odd => k % 2 == 1,
        }
    }
}

/// Search request for a restricted red pulse index `k`.
///
/// With `target_core = Some(c)`, level `c` must rotate to within `epsilon`
/// of `target_angle` while every level outside group `c` stays within
/// `epsilon` of zero. Members `c q²` of the target group follow as
/// `q ×` the core angle and are reported but not constrained. With
/// `target_core = None` every level is held near zero. `parity` fixes
/// `k mod 2`, which decides the sign `(-1)^k` of the boundary state
/// `|↑⟩|m⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSearch {
    pub m: u64,
    pub target_core: Option<u64>,
    pub target_angle: f64,
    pub epsilon: f64,
    pub k_max: u64,
    pub parity: Parity,
}

pub const DEFAULT_K_MAX: u64 = 10_000_000;

impl KSearch {
    pub fn new(m: u64, target_core: u64, target_angle: f64, epsilon: f64, k_max: u64) -> Self {
        KSearch {
            m,
            target_core: Some(target_core),
            target_angle,
            epsilon,
            k_max,
            parity: Parity::Any,
        }
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSearchResult {
    pub k: u64,
    /// Level `p` -> `kπ√(p/(m+1))` reduced to `(-π, π]`.
    pub achieved_angles: BTreeMap<u64, f64>,
    pub max_offtarget_deviation: f64,
    pub target_deviation: f64,
}

impl KSearchResult {
    pub fn max_deviation(&self) -> f64 {
        self.max_offtarget_deviation.max(self.target_deviation)
    }
}

struct Scanner {
    ratios: Vec<(u64, SqrtRatio)>,
    /// Index into `ratios` of the target level, if any.
    target: Option<usize>,
    /// Indices of unconstrained members of the target group.
    free: Vec<bool>,
    req: KSearch,
}

impl Scanner {
    fn new(req: KSearch) -> Result<Self> {
        if req.m == 0 {
            return Err(Error::InvalidArgument("cutoff m must be at least 1".into()));
        }
        if !(req.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", req.epsilon)));
        }
        let part = partition_groups(req.m)?;
        if let Some(c) = req.target_core {
            if !part.groups.contains_key(&c) {
                return Err(Error::InvalidArgument(format!(
                    "{c} is not a squarefree core of any level <= {}",
                    req.m
                )));
            }
        }
        let ratios: Vec<(u64, SqrtRatio)> = (1..=req.m).map(|p| (p, SqrtRatio::new(p, req.m + 1))).collect();
        let mut free = vec![false; ratios.len()];
        let mut target = None;
        if let Some(c) = req.target_core {
            for (i, &(p, _)) in ratios.iter().enumerate() {
                if p == c {
                    target = Some(i);
                } else if part.core_of(p) == c {
                    free[i] = true;
                }
            }
        }
        Ok(Scanner { ratios, target, free, req })
    }

    /// `(target_dev, offtarget_dev)`, or `None` as soon as a bound is violated
    /// (only when `early` is set).
    fn deviations(&self, k: u64, early: bool) -> Option<(f64, f64)> {
        let eps = self.req.epsilon;
        let mut tdev = 0.0;
        if let Some(t) = self.target {
            tdev = angle::distance(self.ratios[t].1.angle(k), self.req.target_angle);
            if early && tdev > eps {
                return None;
            }
        }
        let mut off: f64 = 0.0;
        for (i, (_, r)) in self.ratios.iter().enumerate() {
            if Some(i) == self.target || self.free[i] {
                continue;
            }
            let d = r.angle(k).abs();
            if early && d > eps {
                return None;
            }
            off = off.max(d);
        }
        Some((tdev, off))
    }

    fn result(&self, k: u64) -> KSearchResult {
        let (tdev, off) = self.deviations(k, false).expect("non-early scan always yields");
        KSearchResult {
            k,
            achieved_angles: self.ratios.iter().map(|&(p, r)| (p, r.angle(k))).collect(),
            max_offtarget_deviation: off,
            target_deviation: tdev,
        }
    }

    fn admits(&self, k: u64) -> bool {
        self.req.parity.admits(k)
    }
}

const CHUNK: u64 = 1 << 15;

/// Smallest `k ≤ k_max` (k ≥ 1) meeting the request; exhaustive forward scan.
///
/// The range is split into chunks scanned in parallel batches; the first
/// batch containing a hit yields the minimum, so the answer equals that of a
/// sequential scan.
pub fn find_k(req: &KSearch) -> Result<KSearchResult> {
    let sc = Scanner::new(*req)?;
    if req.epsilon >= std::f64::consts::PI {
        // every angle in (-π, π] is within π of anything
        if let Some(k) = (1..=req.k_max).find(|&k| sc.admits(k)) {
            return Ok(sc.result(k));
        }
    }
    let n_chunks = req.k_max.div_ceil(CHUNK);
    let batch = (rayon::current_num_threads() as u64 * 4).max(1);
    let mut best: Option<(f64, u64)> = None;
    let mut start = 0;
    while start < n_chunks {
        let end = (start + batch).min(n_chunks);
        let outcomes: Vec<(Option<u64>, (f64, u64))> = (start..end)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK + 1;
                let hi = ((ci + 1) * CHUNK).min(req.k_max);
                let mut local_best = (f64::INFINITY, u64::MAX);
                for k in lo..=hi {
                    if !sc.admits(k) {
                        continue;
                    }
                    if sc.deviations(k, true).is_some() {
                        return (Some(k), local_best);
                    }
                    // cheap score: target deviation or first off-target level
                    let (t, o) = sc.deviations(k, false).unwrap();
                    let s = t.max(o);
                    if s < local_best.0 {
                        local_best = (s, k);
                    }
                }
                (None, local_best)
            })
            .collect();
        if let Some(k) = outcomes.iter().find_map(|o| o.0) {
            return Ok(sc.result(k));
        }
        for (_, b) in outcomes {
            if best.is_none_or(|cur| b < cur) {
                best = Some(b);
            }
        }
        start = end;
    }
    let best_k = best.filter(|b| b.1 != u64::MAX).map(|b| b.1).unwrap_or(0);
    Err(Error::KNotFound(Box::new(KNotFound {
        k_max: req.k_max,
        best: sc.result(best_k),
    })))
}

/// Smallest `p ≤ p_max` with `‖U^{p+1} - I‖_HS < epsilon`, so that `U^p`
/// approximates `U⁻¹` with the same Hilbert-Schmidt error.
pub fn approx_inverse_power(u: &CMatrix, epsilon: f64, p_max: u64) -> Result<(u64, f64)> {
    let n = linalg::check_square(u)?;
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let id = linalg::identity(n);
    let mut power = u.clone(); // U^{p+1} with p = 0
    let mut best = (f64::INFINITY, 0);
    for p in 0..=p_max {
        if p > 0 {
            power = u * &power;
        }
        let d = linalg::hs_norm(&(&power - &id));
        if d < epsilon {
            let inv_err = linalg::hs_norm(&(u.pow(p as u32) - u.adjoint()));
            debug_assert!((inv_err - d).abs() < 1e-8 + 1e-8 * p as f64);
            return Ok((p, d));
        }
        if d < best.0 {
            best = (d, p);
        }
    }
    Err(Error::PowerNotFound {
        p_max,
        epsilon,
        best_p: best.1,
        best_distance: best.0,
    })
}
