//! Generator synthesis: limit-generator macros, the boundary generators of
//! the four-level case, and the exact commutator cascades that build a full
//! su(N) basis.
//!
//! Exact bookkeeping lives in [`ExactElement`] (Gaussian-rational matrices
//! with a construction tree). Red-bond weights `√j` are carried by
//! normalizing each group generator by its core: `Ĥ_c / √c = Σ q_j R_j`
//! with `j = c q_j²`, which has integer entries.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize, Serializer};

use crate::arithmetic::{approx_inverse_power, isqrt, partition_groups, select_subspace, GroupPartition, Parity};
use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Q};
use crate::linalg::{self, CMatrix, JsonMatrix};
use crate::model::{carrier_bond, red_bond, ControlPulse};
use crate::realize::{bond_generator, trotter, Context, FlipSpec, Realization};
use crate::simulator;

/// How an element or macro was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Construction {
    /// A named control generator or pulse family.
    Primitive { name: String },
    Commutator { left: Box<Construction>, right: Box<Construction> },
    /// `Σ coefficient · term`, coefficients as exact rationals `"p/q"`.
    Sum { terms: Vec<(String, Construction)> },
    Scale { factor: String, inner: Box<Construction> },
    /// `D A D` for the diagonal sign matrix `D`.
    SignConjugate { signs: Vec<i8>, inner: Box<Construction> },
    /// `V A V⁻¹`.
    Conjugate { by: Box<Construction>, inner: Box<Construction> },
    Power { base: Box<Construction>, exponent: u64 },
    Trotter { steps: usize, parts: Vec<Construction> },
}

impl Construction {
    pub fn primitive(name: impl Into<String>) -> Self {
        Construction::Primitive { name: name.into() }
    }

    fn comm(a: &Construction, b: &Construction) -> Self {
        Construction::Commutator {
            left: Box::new(a.clone()),
            right: Box::new(b.clone()),
        }
    }

    fn scale(f: Q, inner: Construction) -> Self {
        if f == Q::from_integer(1) {
            return inner;
        }
        Construction::Scale {
            factor: f.to_string(),
            inner: Box::new(inner),
        }
    }

    /// `(A ± D A D) / 2`.
    fn halve(a: &Construction, signs: &[i8], keep_flipped: bool) -> Self {
        let sign = if keep_flipped { "-1/2" } else { "1/2" };
        Construction::Sum {
            terms: vec![
                ("1/2".into(), a.clone()),
                (
                    sign.into(),
                    Construction::SignConjugate {
                        signs: signs.to_vec(),
                        inner: Box::new(a.clone()),
                    },
                ),
            ],
        }
    }
}

fn ser_exact<S: Serializer>(m: &ExactMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    JsonMatrix::from(&m.to_cmatrix()).serialize(s)
}

/// Exactly known generator with its construction.
#[derive(Debug, Clone, Serialize)]
pub struct ExactElement {
    pub name: String,
    #[serde(serialize_with = "ser_exact")]
    pub matrix: ExactMatrix,
    pub construction: Construction,
}

impl ExactElement {
    pub fn primitive(name: &str, matrix: ExactMatrix) -> Self {
        ExactElement {
            name: name.into(),
            matrix,
            construction: Construction::primitive(name),
        }
    }

    pub fn commutator(&self, other: &ExactElement, name: &str) -> Self {
        ExactElement {
            name: name.into(),
            matrix: self.matrix.commutator(&other.matrix),
            construction: Construction::comm(&self.construction, &other.construction),
        }
    }

    pub fn plus(&self, other: &ExactElement, name: &str) -> Self {
        ExactElement {
            name: name.into(),
            matrix: &self.matrix + &other.matrix,
            construction: Construction::Sum {
                terms: vec![("1".into(), self.construction.clone()), ("1".into(), other.construction.clone())],
            },
        }
    }

    pub fn scaled(&self, f: Q, name: &str) -> Self {
        ExactElement {
            name: name.into(),
            matrix: self.matrix.scale(f),
            construction: Construction::scale(f, self.construction.clone()),
        }
    }

    /// `(A − DAD)/2` (flipped part) or `(A + DAD)/2` (unflipped part).
    pub fn halved(&self, signs: &[i8], keep_flipped: bool, name: &str) -> Self {
        let c = self.matrix.sign_conjugate(signs);
        let half = Q::new(1, 2);
        let matrix = if keep_flipped {
            (&self.matrix - &c).scale(half)
        } else {
            (&self.matrix + &c).scale(half)
        };
        ExactElement {
            name: name.into(),
            matrix,
            construction: Construction::halve(&self.construction, signs, keep_flipped),
        }
    }

    /// Divide by the rational `λ` with `self = λ · want`, or fail.
    fn normalize_to(&self, want: &ExactMatrix, name: &str) -> Result<Self> {
        let (r, c, v) = want
            .support()
            .into_iter()
            .next()
            .ok_or_else(|| Error::Malformed("normalizing to the zero matrix".into()))?;
        let got = self.matrix.get(r, c);
        let lambda = if v.im == Q::from_integer(0) { got.re / v.re } else { got.im / v.im };
        if lambda == Q::from_integer(0) || want.scale(lambda) != self.matrix {
            return Err(Error::Malformed(format!("{} is not a rational multiple of {name}: {:?}", self.name, self.matrix)));
        }
        Ok(self.scaled(Q::from_integer(1) / lambda, name))
    }
}

/// Exact `Σ_l (E_{2l,2l+1} − E_{2l+1,2l})` (φ = π/2) or its `i(…+…)` partner (φ = 0).
pub fn carrier_exact(n: usize, real: bool) -> ExactMatrix {
    let mut h = ExactMatrix::zeros(n);
    for l in 0..n / 2 {
        let (lo, hi) = carrier_bond(l);
        h = h + bond_exact(n, lo, hi, real);
    }
    h
}

fn bond_exact(n: usize, lo: usize, hi: usize, real: bool) -> ExactMatrix {
    if real {
        ExactMatrix::real_pair(n, lo, hi)
    } else {
        ExactMatrix::imag_pair(n, lo, hi)
    }
}

/// `Ĥ_c / √c = Σ_{j ∈ G_c} q_j R_j` on the controlled space of `ctx`.
pub fn group_exact(ctx: &Context, core: u64, real: bool) -> Result<ExactMatrix> {
    let n = ctx.n();
    let members = ctx
        .partition()
        .members(core)
        .ok_or_else(|| Error::InvalidArgument(format!("{core} is not a core at cutoff {}", ctx.m())))?;
    let mut g = ExactMatrix::zeros(n);
    for &j in members {
        let (lo, hi) = red_bond(j as usize);
        g = g + bond_exact(n, lo, hi, real).scale(Q::from_integer(isqrt(j / core) as i64));
    }
    Ok(g)
}

/// `Ĥ_c = Σ_{j∈G_c} √j B_j(φ)` as a floating matrix.
pub fn group_generator(ctx: &Context, core: u64, phi: f64) -> Result<CMatrix> {
    let members = ctx
        .partition()
        .members(core)
        .ok_or_else(|| Error::InvalidArgument(format!("{core} is not a core at cutoff {}", ctx.m())))?;
    let mut g = linalg::zeros(ctx.n());
    for &j in members {
        let (lo, hi) = red_bond(j as usize);
        g += bond_generator(ctx.n(), lo, hi, phi) * linalg::c((j as f64).sqrt(), 0.0);
    }
    Ok(g)
}

/// Carrier generator restricted to the controlled space.
pub fn carrier_generator(n: usize, phi: f64) -> CMatrix {
    let mut g = linalg::zeros(n);
    for l in 0..n / 2 {
        let (lo, hi) = carrier_bond(l);
        g += bond_generator(n, lo, hi, phi);
    }
    g
}

/// A pulse sequence approximating `exp(time · ideal_generator)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisMacro {
    pub name: String,
    #[serde(with = "linalg::json_matrix")]
    pub ideal_generator: CMatrix,
    pub time: f64,
    pub pulses: Vec<ControlPulse>,
    /// Certified operator-norm bound on `‖achieved − exp(time · G)‖`.
    pub error_bound: f64,
    pub construction: Construction,
    /// Index of the single red pulse, for one-pulse group macros.
    pub k: Option<u64>,
}

impl SynthesisMacro {
    fn from_realization(name: &str, g: CMatrix, time: f64, r: Realization, construction: Construction) -> Result<Self> {
        let want = linalg::expm_skew(&g, time);
        let d = linalg::max_abs(&(&r.ideal - &want));
        if d > 1e-9 {
            return Err(Error::Malformed(format!("{name}: realized ideal deviates by {d:.3e}")));
        }
        let k = match r.pulses.as_slice() {
            [p] => p.k,
            _ => None,
        };
        Ok(SynthesisMacro {
            name: name.into(),
            ideal_generator: g,
            time,
            error_bound: r.certified_bound(),
            pulses: r.pulses,
            construction,
            k,
        })
    }

    pub fn target_unitary(&self) -> CMatrix {
        linalg::expm_skew(&self.ideal_generator, self.time)
    }

    /// Simulated `‖achieved − exp(time · G)‖` with one buffer level.
    pub fn measured_error(&self, m: usize) -> Result<f64> {
        simulator::measured_error(&self.pulses, &self.target_unitary(), m)
    }
}

/// One restricted red pulse approximating `exp(s Ĥ_c)` with the core level
/// rotated by `alpha` (so `s = alpha / √c`).
pub fn group_generator_macro(ctx: &Context, core: u64, alpha: f64, epsilon: f64) -> Result<SynthesisMacro> {
    let g = group_generator(ctx, core, FRAC_PI_2)?;
    let r = ctx.group(core, FRAC_PI_2, alpha, epsilon, Parity::Even)?;
    let name = format!("group[{core}]");
    SynthesisMacro::from_realization(
        &name,
        g,
        alpha / (core as f64).sqrt(),
        r,
        Construction::primitive(format!("restricted red pulse isolating group {core}")),
    )
}

/// `H̃₅ = H₂ + Σ_c Ĥ_c` on the controlled space: real, first off-diagonal
/// only, carrier bonds 1 and red bond `j` weighted `√j`.
pub fn h5_tilde_generator(ctx: &Context) -> CMatrix {
    let mut g = carrier_generator(ctx.n(), FRAC_PI_2);
    for &c in ctx.partition().groups.keys() {
        g += group_generator(ctx, c, FRAC_PI_2).expect("core from partition");
    }
    g
}

/// `exp(time · H̃₅)` by Strang splitting of the carrier and the product of
/// group pulses, with splitting tolerance `epsilon`.
pub fn h5_tilde(ctx: &Context, time: f64, epsilon: f64) -> Result<SynthesisMacro> {
    let n = ctx.n();
    let ga = carrier_generator(n, FRAC_PI_2);
    let gb = &h5_tilde_generator(ctx) - &ga;
    let cores: Vec<u64> = ctx.partition().groups.keys().copied().collect();
    let ra = |t: f64| Ok(ctx.carrier(FRAC_PI_2, t));
    let rb = |t: f64| {
        let mut r = Realization::identity(n);
        for &c in &cores {
            r = r.then(&ctx.group(c, FRAC_PI_2, t * (c as f64).sqrt(), epsilon, Parity::Even)?);
        }
        Ok(r)
    };
    let (r, steps) = trotter(&ra, &rb, &ga, &gb, time, epsilon, 1 << 12)?;
    let mut parts = vec![Construction::primitive("H2")];
    parts.extend(cores.iter().map(|c| Construction::primitive(format!("group[{c}]"))));
    SynthesisMacro::from_realization("H5~", ga + gb, time, r, Construction::Trotter { steps, parts })
}

/// Exact boundary generators of the four-level case with pulse macros.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryGenerators {
    pub h6: ExactElement,
    pub h7: ExactElement,
    pub h8: ExactElement,
    /// Odd `k` of the flip `U₁ = R⁻(kπ/√2, π/2)`.
    pub u1_k: u64,
    /// `p` with `U₁^p ≈ U₁⁻¹`.
    pub inverse_power: u64,
    pub macros: Vec<SynthesisMacro>,
}

/// `exp(t G_half)` where `G_half` is the part of the carrier `G(φ)` that
/// `U₁` negates (`keep_flipped`) or fixes: `U₁, carrier(∓t/2), U₁^p, carrier(t/2)`.
fn u1_sandwich(ctx: &Context, u1: &Realization, u1_inv: &Realization, phi: f64, t: f64, keep_flipped: bool) -> Realization {
    let sign = if keep_flipped { -1.0 } else { 1.0 };
    u1.then(&ctx.carrier(phi, sign * t / 2.0))
        .then(u1_inv)
        .then(&ctx.carrier(phi, t / 2.0))
}

/// `H₆`, `H₇`, `H₈` at cutoff 1, with macros for `exp(t H)` at splitting
/// and angle tolerance `epsilon`.
pub fn su4_boundary_generators(ctx: &Context, t: f64, epsilon: f64) -> Result<BoundaryGenerators> {
    if ctx.m() != 1 {
        return Err(Error::InvalidArgument(format!(
            "boundary generators are built at cutoff 1, got {}",
            ctx.m()
        )));
    }
    let n = ctx.n();
    let spec = FlipSpec {
        core: None,
        parity: Parity::Odd,
    };
    let signs = ctx.flip_signs(spec);
    let h1 = ExactElement::primitive("H1", carrier_exact(n, false));
    let h2 = ExactElement::primitive("H2", carrier_exact(n, true));
    let h6 = h1.halved(&signs, true, "H6");
    let h7 = h2.halved(&signs, true, "H7");
    let h5 = ExactElement {
        name: "H5".into(),
        matrix: &h2.matrix + &group_exact(ctx, 1, true)?,
        construction: Construction::Sum {
            terms: vec![("1".into(), h2.construction.clone()), ("1".into(), Construction::primitive("group[1]"))],
        },
    };
    let h8 = ExactElement {
        name: "H8".into(),
        matrix: &h5.matrix - &h7.matrix,
        construction: Construction::Sum {
            terms: vec![("1".into(), h5.construction.clone()), ("-1".into(), h7.construction.clone())],
        },
    };
    expect(&h6, &ExactMatrix::imag_pair(n, 2, 3))?;
    expect(&h7, &ExactMatrix::real_pair(n, 2, 3))?;
    expect(&h8, &(&ExactMatrix::real_pair(n, 0, 1) + &ExactMatrix::real_pair(n, 1, 2)))?;

    let u1 = ctx.flip(spec, epsilon)?;
    let u1_k = u1.pulses[0].k.expect("restricted flip pulse");
    let block = simulator::controlled_block(&u1.pulses, 1, 1)?;
    let (p, _) = approx_inverse_power(&block, 4.0 * epsilon, 1000)?;
    if p % 2 == 0 {
        return Err(Error::Malformed(format!("U1^{p} approximates the identity, not the flip")));
    }
    let u1_inv = u1.repeat(p as usize);

    let conj = |c: &Construction| Construction::Conjugate {
        by: Box::new(Construction::primitive(format!("U1 (k={u1_k}, inverse U1^{p})"))),
        inner: Box::new(c.clone()),
    };
    let m6 = SynthesisMacro::from_realization(
        "H6",
        h6.matrix.to_cmatrix(),
        t,
        u1_sandwich(ctx, &u1, &u1_inv, 0.0, t, true),
        Construction::Sum {
            terms: vec![("1/2".into(), h1.construction.clone()), ("-1/2".into(), conj(&h1.construction))],
        },
    )?;
    let m7 = SynthesisMacro::from_realization(
        "H7",
        h7.matrix.to_cmatrix(),
        t,
        u1_sandwich(ctx, &u1, &u1_inv, FRAC_PI_2, t, true),
        Construction::Sum {
            terms: vec![("1/2".into(), h2.construction.clone()), ("-1/2".into(), conj(&h2.construction))],
        },
    )?;
    let ga = ExactMatrix::real_pair(n, 0, 1).to_cmatrix();
    let gb = ExactMatrix::real_pair(n, 1, 2).to_cmatrix();
    let ra = |s: f64| Ok(u1_sandwich(ctx, &u1, &u1_inv, FRAC_PI_2, s, false));
    let rb = |s: f64| ctx.group(1, FRAC_PI_2, s, epsilon, Parity::Even);
    let (r8, steps) = trotter(&ra, &rb, &ga, &gb, t, epsilon, 1 << 12)?;
    let m8 = SynthesisMacro::from_realization(
        "H8",
        h8.matrix.to_cmatrix(),
        t,
        r8,
        Construction::Trotter {
            steps,
            parts: vec![
                Construction::Sum {
                    terms: vec![("1/2".into(), h2.construction.clone()), ("1/2".into(), conj(&h2.construction))],
                },
                Construction::primitive("group[1]"),
            ],
        },
    )?;
    Ok(BoundaryGenerators {
        h6,
        h7,
        h8,
        u1_k,
        inverse_power: p,
        macros: vec![m6, m7, m8],
    })
}

fn expect(el: &ExactElement, want: &ExactMatrix) -> Result<()> {
    if &el.matrix != want {
        return Err(Error::Malformed(format!("{} = {:?}, expected {:?}", el.name, el.matrix, want)));
    }
    Ok(())
}

fn path_sum(n: usize, upto: usize) -> ExactMatrix {
    let mut h = ExactMatrix::zeros(n);
    for k in 0..upto {
        h = h + ExactMatrix::real_pair(n, k, k + 1);
    }
    h
}

/// `[H₈, ·]` cascade down the last column starting from `top`.
fn last_column_chain(
    h8: &ExactElement,
    top: &ExactElement,
    n: usize,
    letter: &str,
    pair: fn(usize, usize, usize) -> ExactMatrix,
) -> Result<Vec<ExactElement>> {
    if n < 2 || h8.matrix.dim() != n || top.matrix.dim() != n {
        return Err(Error::Malformed(format!("chain inputs must be {n}x{n} with n >= 2")));
    }
    if h8.matrix != path_sum(n, n - 2) {
        return Err(Error::Malformed(format!("H8 is not the path generator: {:?}", h8.matrix)));
    }
    if top.matrix != pair(n, n - 2, n - 1) {
        return Err(Error::Malformed(format!("{} is not the boundary generator: {:?}", top.name, top.matrix)));
    }
    // out[j - 1] = chain element j (1-based), built from j = n-1 down.
    let mut out: Vec<Option<ExactElement>> = vec![None; n - 1];
    out[n - 2] = Some(ExactElement {
        name: format!("{letter}{}", n - 1),
        ..top.clone()
    });
    for j in (1..n - 1).rev() {
        let name = format!("{letter}{j}");
        let mut el = h8.commutator(out[j].as_ref().unwrap(), &name);
        if j + 2 < n {
            el = el.plus(out[j + 1].as_ref().unwrap(), &name);
        }
        out[j - 1] = Some(el);
    }
    let out: Vec<ExactElement> = out.into_iter().map(Option::unwrap).collect();
    for (j, el) in out.iter().enumerate() {
        expect(el, &pair(n, j, n - 1))?;
    }
    Ok(out)
}

/// `M_{N−1} = H₇`, `M_{N−2} = [H₈, M_{N−1}]`, `M_j = [H₈, M_{j+1}] + M_{j+2}`;
/// element `j − 1` of the result is `E_{jN} − E_{Nj}` (1-based).
pub fn m_chain(h8: &ExactElement, h7: &ExactElement, n: usize) -> Result<Vec<ExactElement>> {
    last_column_chain(h8, h7, n, "M", ExactMatrix::real_pair)
}

/// As [`m_chain`] from `J_{N−1} = H₆`; element `j − 1` is `i(E_{jN} + E_{Nj})`.
pub fn j_chain(h8: &ExactElement, h6: &ExactElement, n: usize) -> Result<Vec<ExactElement>> {
    last_column_chain(h8, h6, n, "J", ExactMatrix::imag_pair)
}

fn partition_group_exact(part: &GroupPartition, n: usize, core: u64, real: bool) -> ExactMatrix {
    let mut g = ExactMatrix::zeros(n);
    for &j in part.members(core).expect("core from partition") {
        let (lo, hi) = red_bond(j as usize);
        g = g + bond_exact(n, lo, hi, real).scale(Q::from_integer(isqrt(j / core) as i64));
    }
    g
}

/// The `S` cascade that walks a single red bond down to the boundary
/// carrier bond `E_{(N−1)N} − E_{N(N−1)}`.
///
/// Starting from the singleton level `s`, each pass at red bond `r` forms
/// `S₂ = [H₂, S₁]`, `S₃ = [S₁, S₂]`, cuts `S₃` to carrier bond `r` by the
/// sign flip at index `2r+1`, then (for `r < m`) steps to red bond `r+1`
/// with `S₅ = [S₄, Ĥ_{r+1}]` and `S₆ = [S₅, S₄]`. The last pass ends in `S₇`.
pub fn s_chain(m: usize) -> Result<Vec<ExactElement>> {
    let Some(s) = select_subspace(m as u64).singleton() else {
        return Err(Error::InvalidSubspace(m as u64));
    };
    let s = s as usize;
    let n = 2 * m + 2;
    let part = partition_groups(m as u64)?;
    let h2 = ExactElement::primitive("H2", carrier_exact(n, true));
    let mut cur = ExactElement {
        name: "S1".into(),
        matrix: partition_group_exact(&part, n, s as u64, true),
        construction: Construction::primitive(format!("group[{s}]/sqrt({s})")),
    };
    let (lo, hi) = red_bond(s);
    expect(&cur, &ExactMatrix::real_pair(n, lo, hi))?;
    let mut out = vec![cur.clone()];
    let mut r = s;
    loop {
        let tag = |i: u8| if r == s { format!("S{i}") } else { format!("S{i}@{r}") };
        let s2 = h2.commutator(&cur, &tag(2));
        let s3 = cur.commutator(&s2, &tag(3));
        let mut signs = vec![1i8; n];
        signs[2 * r + 1] = -1;
        let name4 = if r == m { "S7".to_string() } else { tag(4) };
        let s4 = s3
            .halved(&signs, true, &name4)
            .normalize_to(&ExactMatrix::real_pair(n, 2 * r, 2 * r + 1), &name4)?;
        out.extend([s2, s3, s4.clone()]);
        if r == m {
            return Ok(out);
        }
        let next = (r + 1) as u64;
        let core = part.core_of(next);
        let q_next = isqrt(next / core) as i64;
        let g = ExactElement {
            name: format!("group[{core}]"),
            matrix: partition_group_exact(&part, n, core, true).scale(Q::new(1, q_next)),
            construction: Construction::scale(
                Q::new(1, q_next),
                Construction::primitive(format!("group[{core}]/sqrt({core})")),
            ),
        };
        let s5 = s4
            .commutator(&g, &tag(5))
            .normalize_to(&ExactMatrix::real_pair(n, 2 * r, 2 * r + 2), &tag(5))?;
        let s6 = s5
            .commutator(&s4, &tag(6))
            .normalize_to(&ExactMatrix::real_pair(n, 2 * r + 1, 2 * r + 2), &tag(6))?;
        out.extend([s5, s6.clone()]);
        cur = s6;
        r += 1;
    }
}

/// Canonical su(N) basis assembled from the controls with exact provenance.
#[derive(Debug, Clone, Serialize)]
pub struct FullBasis {
    pub n: usize,
    pub elements: Vec<ExactElement>,
}

impl FullBasis {
    pub fn matrices(&self) -> Vec<CMatrix> {
        self.elements.iter().map(|e| e.matrix.to_cmatrix()).collect()
    }
}

/// Bond `(i, i+1)` generator (`Y` if `real`, else `X`) cut out of the
/// carrier or a group generator by exact sign-flip halvings.
fn adjacent_exact(ctx: &Context, i: usize, real: bool) -> Result<ExactElement> {
    let n = ctx.n();
    let axis = if real { "Y" } else { "X" };
    let name = format!("{axis}[{i},{}]", i + 1);
    let el = if i.is_multiple_of(2) {
        let carrier = ExactElement::primitive(if real { "H2" } else { "H1" }, carrier_exact(n, real));
        let mut g = carrier;
        for h in ctx.carrier_plan(i / 2)? {
            g = g.halved(&ctx.flip_signs(h.flip), h.keep_flipped, &name);
        }
        g
    } else {
        let p = i.div_ceil(2) as u64;
        let core = ctx.partition().core_of(p);
        let g = ExactElement::primitive(&format!("group[{core}]/sqrt({core})"), group_exact(ctx, core, real)?);
        if ctx.partition().is_singleton(p) {
            ExactElement { name: name.clone(), ..g }
        } else {
            let mut signs = vec![1i8; n];
            signs[2 * p as usize] = -1;
            signs[2 * p as usize + 1] = -1;
            g.halved(&signs, true, &name)
                .scaled(Q::new(1, isqrt(p / core) as i64), &name)
        }
    };
    expect(&el, &bond_exact(n, i, i + 1, real))?;
    Ok(el)
}

/// All `N² − 1` canonical generators `E_pq − E_qp`, `i(E_pq + E_qp)` (p < q)
/// and `i(E_ii − E_{i+1,i+1})`, each verified exactly.
///
/// Adjacent bonds come from sign-flip halvings; the last column from the
/// `M`/`J` chains (with `S₇` as the boundary generator when `m` admits the
/// `S` cascade); the rest from `[Y_{p,q−1}, Y_{q−1,q}] = Y_pq` and
/// `[Y_{p,q−1}, X_{q−1,q}] = X_pq`.
pub fn full_basis(m: usize) -> Result<FullBasis> {
    let ctx = Context::new(m, crate::arithmetic::DEFAULT_K_MAX, std::sync::Arc::new(crate::cache::KCache::in_memory()))?;
    let n = ctx.n();
    let mut ys: Vec<ExactElement> = (0..n - 1).map(|i| adjacent_exact(&ctx, i, true)).collect::<Result<_>>()?;
    let xs: Vec<ExactElement> = (0..n - 1).map(|i| adjacent_exact(&ctx, i, false)).collect::<Result<_>>()?;
    if select_subspace(m as u64).is_valid() {
        let s7 = s_chain(m)?.pop().expect("nonempty chain");
        ys[n - 2] = ExactElement {
            name: format!("Y[{},{}]", n - 2, n - 1),
            ..s7
        };
    }
    let mut h8 = ExactElement::primitive("H8", ExactMatrix::zeros(n));
    if n > 2 {
        h8 = ExactElement {
            name: "H8".into(),
            matrix: path_sum(n, n - 2),
            construction: Construction::Sum {
                terms: ys[..n - 2].iter().map(|y| ("1".into(), y.construction.clone())).collect(),
            },
        };
    }
    let mcol = m_chain(&h8, &ys[n - 2], n)?;
    let jcol = j_chain(&h8, &xs[n - 2], n)?;

    // y[p][q], x[p][q] for p < q.
    let mut y: Vec<Vec<Option<ExactElement>>> = vec![vec![None; n]; n];
    let mut x = y.clone();
    for i in 0..n - 1 {
        y[i][i + 1] = Some(ys[i].clone());
        x[i][i + 1] = Some(xs[i].clone());
    }
    for p in 0..n - 2 {
        y[p][n - 1] = Some(ExactElement {
            name: format!("Y[{p},{}]", n - 1),
            ..mcol[p].clone()
        });
        x[p][n - 1] = Some(ExactElement {
            name: format!("X[{p},{}]", n - 1),
            ..jcol[p].clone()
        });
    }
    for gap in 2..n - 1 {
        for p in 0..n - gap {
            let q = p + gap;
            if q == n - 1 {
                continue;
            }
            let left = y[p][q - 1].clone().expect("shorter pair built first");
            y[p][q] = Some(left.commutator(y[q - 1][q].as_ref().unwrap(), &format!("Y[{p},{q}]")));
            x[p][q] = Some(left.commutator(x[q - 1][q].as_ref().unwrap(), &format!("X[{p},{q}]")));
        }
    }
    let mut elements = vec![];
    for p in 0..n {
        for q in p + 1..n {
            let el = y[p][q].take().expect("all pairs built");
            expect(&el, &ExactMatrix::real_pair(n, p, q))?;
            elements.push(el);
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            let el = x[p][q].take().expect("all pairs built");
            expect(&el, &ExactMatrix::imag_pair(n, p, q))?;
            elements.push(el);
        }
    }
    for i in 0..n - 1 {
        let z = ys[i].commutator(&xs[i], "").scaled(Q::new(1, 2), &format!("Z[{i},{}]", i + 1));
        expect(&z, &ExactMatrix::diag_pair(n, i, i + 1))?;
        elements.push(z);
    }
    Ok(FullBasis { n, elements })
}
