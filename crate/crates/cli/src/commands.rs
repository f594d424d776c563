use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use jcctl::arithmetic::{partition_groups, select_subspace};
use jcctl::compiler::is_admissible;
use jcctl::exact::ExactMatrix;
use jcctl::lie::{self, DEFAULT_RANK_TOL};
use jcctl::linalg::{self, CMatrix, JsonMatrix, C64};
use jcctl::model::{carrier_hamiltonian, red_sideband_hamiltonian};
use jcctl::random::random_su;
use jcctl::simulator;
use jcctl::synthesis::{self, ExactElement, SynthesisMacro};
use jcctl::{Budget, Context, ControlPulse, Error, KCache, Parity, Result, TruncatedSpace};

use crate::{ChainKind, MacroKind, Report, RunConfig};

type Cache = Arc<KCache>;

fn context(cfg: &RunConfig, cache: &Cache) -> Result<Context> {
    Context::new(cfg.m, cfg.k_max, cache.clone())
}

fn drives(m: usize) -> Vec<CMatrix> {
    let s = TruncatedSpace::new(m, 0);
    vec![
        carrier_hamiltonian(&s, 0.0).entries,
        carrier_hamiltonian(&s, FRAC_PI_2).entries,
        red_sideband_hamiltonian(&s, 0.0).entries,
        red_sideband_hamiltonian(&s, FRAC_PI_2).entries,
    ]
}

fn check_m(cfg: &RunConfig) -> Result<()> {
    if cfg.m == 0 {
        return Err(Error::InvalidArgument("--m must be at least 1".into()));
    }
    Ok(())
}

pub fn model(cfg: &RunConfig) -> Result<Report> {
    check_m(cfg)?;
    let d = drives(cfg.m);
    Report::ok(json!({
        "N": 2 * (cfg.m + 1),
        "H1": JsonMatrix::from(&d[0]),
        "H2": JsonMatrix::from(&d[1]),
        "H3": JsonMatrix::from(&d[2]),
        "H4": JsonMatrix::from(&d[3]),
    }))
}

/// `D H₁ D` with `D` the boundary sign of an odd restricted red pulse.
fn boundary_conjugate(m: usize) -> CMatrix {
    let n = 2 * (m + 1);
    let mut d = linalg::identity(n);
    d[(n - 1, n - 1)] = C64::new(-1.0, 0.0);
    &d * &drives(m)[0] * &d
}

fn closure_basis(m: usize, augment: bool) -> Result<(usize, lie::LieBasis)> {
    let mut g = drives(m);
    if augment {
        g.push(boundary_conjugate(m));
    }
    Ok((g.len(), lie::closure(&g, DEFAULT_RANK_TOL)?))
}

fn closure_dim(m: usize, augment: bool) -> Result<usize> {
    Ok(closure_basis(m, augment)?.1.dim())
}

pub fn closure(cfg: &RunConfig, augment: bool) -> Result<Report> {
    check_m(cfg)?;
    let n = 2 * (cfg.m + 1);
    let (count, basis) = closure_basis(cfg.m, augment)?;
    let dim = basis.dim();
    Report::ok(json!({
        "N": n,
        "generator_count": count,
        "dim": dim,
        "controllable": dim == n * n - 1,
        "augmented": augment,
        "residual_history": basis.residual_history,
    }))
}

pub fn groups(cfg: &RunConfig) -> Result<Report> {
    Report::ok(partition_groups(cfg.m as u64)?.groups)
}

pub fn findk(cfg: &RunConfig, cache: &Cache, core: Option<u64>, target: f64, parity: Parity) -> Result<Report> {
    let ctx = context(cfg, cache)?;
    Report::ok(ctx.search(core, target, cfg.epsilon, parity)?)
}

#[derive(Serialize)]
struct MacroReport {
    #[serde(rename = "macro")]
    mac: SynthesisMacro,
    measured_error: f64,
}

fn build_macro(ctx: &Context, kind: MacroKind, core: u64, alpha: f64, eps: f64) -> Result<SynthesisMacro> {
    match kind {
        MacroKind::Group => synthesis::group_generator_macro(ctx, core, alpha, eps),
        MacroKind::H5 => synthesis::h5_tilde(ctx, alpha, eps),
        MacroKind::H6 | MacroKind::H7 | MacroKind::H8 => {
            let mut b = synthesis::su4_boundary_generators(ctx, alpha, eps)?;
            let i = match kind {
                MacroKind::H6 => 0,
                MacroKind::H7 => 1,
                _ => 2,
            };
            Ok(b.macros.swap_remove(i))
        }
    }
}

pub fn macro_(cfg: &RunConfig, cache: &Cache, kind: MacroKind, core: u64, alpha: f64) -> Result<Report> {
    let ctx = context(cfg, cache)?;
    let mac = build_macro(&ctx, kind, core, alpha, cfg.epsilon)?;
    let measured_error = mac.measured_error(cfg.m)?;
    Report::ok(MacroReport { mac, measured_error })
}

fn path_generator(n: usize) -> ExactElement {
    let mut h = ExactMatrix::zeros(n);
    for k in 0..n.saturating_sub(2) {
        h = h + ExactMatrix::real_pair(n, k, k + 1);
    }
    ExactElement::primitive("H8", h)
}

pub fn chains(cfg: &RunConfig, which: ChainKind) -> Result<Report> {
    check_m(cfg)?;
    let n = 2 * (cfg.m + 1);
    let elements = match which {
        ChainKind::M => synthesis::m_chain(
            &path_generator(n),
            &ExactElement::primitive("H7", ExactMatrix::real_pair(n, n - 2, n - 1)),
            n,
        )?,
        ChainKind::J => synthesis::j_chain(
            &path_generator(n),
            &ExactElement::primitive("H6", ExactMatrix::imag_pair(n, n - 2, n - 1)),
            n,
        )?,
        ChainKind::S => synthesis::s_chain(cfg.m)?,
        ChainKind::Basis => synthesis::full_basis(cfg.m)?.elements,
    };
    Report::ok(json!({ "N": n, "count": elements.len(), "elements": elements }))
}

fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path)?;
    let m: JsonMatrix = serde_json::from_str(&text)?;
    m.to_matrix()
}

/// Built-in targets: `swap01` exchanges basis states 0 and 1, `fourier` is the
/// discrete Fourier transform. Anything else is read as a matrix file.
fn named_target(n: usize, name: &str) -> Result<CMatrix> {
    match name {
        "swap01" => {
            let mut u = linalg::identity(n);
            u[(0, 0)] = C64::new(0.0, 0.0);
            u[(1, 1)] = C64::new(0.0, 0.0);
            u[(0, 1)] = C64::new(1.0, 0.0);
            u[(1, 0)] = C64::new(1.0, 0.0);
            Ok(u)
        }
        "fourier" => {
            let scale = 1.0 / (n as f64).sqrt();
            Ok(CMatrix::from_fn(n, n, |r, c| {
                let phase = 2.0 * std::f64::consts::PI * ((r * c) % n) as f64 / n as f64;
                C64::from_polar(scale, phase)
            }))
        }
        file => read_matrix(Path::new(file)),
    }
}

fn target_or_random(cfg: &RunConfig, target: Option<&str>) -> Result<CMatrix> {
    let n = 2 * (cfg.m + 1);
    match target {
        Some(t) => named_target(n, t),
        None => Ok(random_su(n, cfg.seed)),
    }
}

pub fn compile(cfg: &RunConfig, cache: &Cache, target: Option<&str>, max_pulses: usize) -> Result<Report> {
    check_m(cfg)?;
    let u = target_or_random(cfg, target)?;
    let budget = Budget {
        k_max: cfg.k_max,
        max_pulses,
    };
    let res = jcctl::compile(&u, cfg.m, cfg.tolerance, budget, cache.clone())?;
    let eval = simulator::evaluate(&res.pulses, &u, cfg.m)?;
    let exhausted = !res.complete;
    let mut r = Report::ok(json!({
        "target": JsonMatrix::from(&u),
        "compilation": res,
        "measured_fidelity": eval.fidelity_vs_target,
        "leakage": eval.leakage,
        "admissible": is_admissible(&res.pulses, cfg.m),
    }))?;
    let mut csv = String::from("factor,p,q,error_bound\n");
    for (i, (f, e)) in res.decomposition.iter().zip(&res.factor_errors).enumerate() {
        let _ = writeln!(csv, "{i},{},{},{e}", f.p, f.q);
    }
    r.csv = Some(csv);
    r.exhausted = exhausted;
    Ok(r)
}

pub fn simulate(cfg: &RunConfig, pulses: &Path, target: Option<&Path>, buffer: usize) -> Result<Report> {
    check_m(cfg)?;
    let seq: Vec<ControlPulse> = serde_json::from_str(&std::fs::read_to_string(pulses)?)?;
    let t = match target {
        Some(p) => read_matrix(p)?,
        None => linalg::identity(2 * (cfg.m + 1)),
    };
    Report::ok(simulator::evaluate_with_buffer(&seq, &t, cfg.m, buffer)?)
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, r: Result<(bool, String)>) -> Check {
    let (pass, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

pub fn verify(cfg: &RunConfig, cache: &Cache) -> Result<Report> {
    check_m(cfg)?;
    let m = cfg.m;
    let n = 2 * (m + 1);
    let full = n * n - 1;
    let mut checks = vec![];
    checks.push(check("drives are traceless skew-Hermitian", {
        let ok = drives(m)
            .iter()
            .all(|h| linalg::skew_defect(h) == 0.0 && linalg::trace(h) == C64::new(0.0, 0.0));
        Ok((ok, format!("N = {n}")))
    }));
    checks.push(check(
        "closure reaches su(N)",
        (|| {
            let bare = closure_dim(m, false)?;
            if bare == full {
                return Ok((true, format!("dim {bare}")));
            }
            let aug = closure_dim(m, true)?;
            Ok((aug == full, format!("bare dim {bare}, with boundary conjugate {aug}, full {full}")))
        })(),
    ));
    checks.push(check(
        "last-column chains",
        (|| {
            let h8 = path_generator(n);
            let ms = synthesis::m_chain(&h8, &ExactElement::primitive("H7", ExactMatrix::real_pair(n, n - 2, n - 1)), n)?;
            let js = synthesis::j_chain(&h8, &ExactElement::primitive("H6", ExactMatrix::imag_pair(n, n - 2, n - 1)), n)?;
            Ok((ms.len() == n - 1 && js.len() == n - 1, format!("{} + {} elements", ms.len(), js.len())))
        })(),
    ));
    if select_subspace(m as u64).is_valid() {
        checks.push(check(
            "S cascade reaches the boundary",
            (|| {
                let s = synthesis::s_chain(m)?;
                let last = s.last().expect("nonempty");
                Ok((last.matrix == ExactMatrix::real_pair(n, n - 2, n - 1), format!("{} steps", s.len())))
            })(),
        ));
    }
    checks.push(check(
        "full basis",
        synthesis::full_basis(m).map(|b| (b.elements.len() == full, format!("{} elements", b.elements.len()))),
    ));
    checks.push(check(
        "restricted sequence does not leak",
        (|| {
            let seq: Vec<ControlPulse> = (0..1000u64)
                .map(|i| {
                    let phi = ((cfg.seed.wrapping_mul(31).wrapping_add(i * 17)) % 628) as f64 / 100.0;
                    if i % 2 == 0 {
                        ControlPulse::carrier(0.1 * (i % 13) as f64, phi)
                    } else {
                        ControlPulse::red_restricted(m, 1 + (cfg.seed + i * 7919) % 100_000, phi)
                    }
                })
                .collect();
            let r = simulator::evaluate(&seq, &linalg::identity(n), m)?;
            Ok((r.leakage < 1e-12, format!("leakage {:e}", r.leakage)))
        })(),
    ));
    checks.push(check(
        "compile a seeded random target",
        (|| {
            let _ = context(cfg, cache)?;
            let u = random_su(n, cfg.seed);
            let res = jcctl::compile(&u, m, cfg.tolerance, Budget { k_max: cfg.k_max, ..Budget::default() }, cache.clone())?;
            if !res.complete {
                return Ok((false, res.failure.unwrap_or_default()));
            }
            let f = simulator::evaluate(&res.pulses, &u, m)?.fidelity_vs_target;
            Ok((f >= 1.0 - cfg.tolerance, format!("fidelity {f}, {} pulses", res.pulse_count)))
        })(),
    ));
    let all = checks.iter().all(|c| c.pass);
    let mut r = Report::ok(json!({ "pass": all, "checks": checks }))?;
    r.exhausted = !all;
    Ok(r)
}

#[derive(Serialize)]
struct SweepRow {
    epsilon: f64,
    k_max: u64,
    k_found: Option<u64>,
    macro_error_measured: Option<f64>,
    compile_fidelity: Option<f64>,
    pulse_count: Option<usize>,
    status: String,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn sweep_row(cfg: &RunConfig, cache: &Cache, eps: f64, k_max: u64, core: u64, alpha: f64) -> Result<SweepRow> {
    let ctx = Context::new(cfg.m, k_max, cache.clone())?;
    let mut row = SweepRow {
        epsilon: eps,
        k_max,
        k_found: None,
        macro_error_measured: None,
        compile_fidelity: None,
        pulse_count: None,
        status: "ok".into(),
    };
    match synthesis::group_generator_macro(&ctx, core, alpha, eps) {
        Ok(mac) => {
            row.k_found = mac.k;
            row.macro_error_measured = Some(mac.measured_error(cfg.m)?);
        }
        Err(Error::KNotFound(_)) => row.status = "k_not_found".into(),
        Err(e) => return Err(e),
    }
    let u = random_su(ctx.n(), cfg.seed);
    let budget = Budget {
        k_max,
        ..Budget::default()
    };
    let res = jcctl::compile(&u, cfg.m, eps, budget, cache.clone())?;
    if res.complete {
        row.compile_fidelity = Some(simulator::evaluate(&res.pulses, &u, cfg.m)?.fidelity_vs_target);
        row.pulse_count = Some(res.pulse_count);
    } else if row.status == "ok" {
        row.status = "compile_incomplete".into();
    } else {
        row.status.push_str("+compile_incomplete");
    }
    Ok(row)
}

pub fn sweep(cfg: &RunConfig, cache: &Cache, epsilons: &[f64], k_maxes: &[u64], core: u64, alpha: f64) -> Result<Report> {
    check_m(cfg)?;
    if epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidArgument("sweep epsilons must lie in (0, 1)".into()));
    }
    let k_maxes = if k_maxes.is_empty() { vec![cfg.k_max] } else { k_maxes.to_vec() };
    let mut rows = vec![];
    for &k_max in &k_maxes {
        for &eps in epsilons {
            rows.push(sweep_row(cfg, cache, eps, k_max, core, alpha)?);
        }
    }
    let mut csv = String::from("epsilon,k_max,k_found,macro_error_measured,compile_fidelity,pulse_count,status\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.epsilon,
            r.k_max,
            opt(&r.k_found),
            opt(&r.macro_error_measured),
            opt(&r.compile_fidelity),
            opt(&r.pulse_count),
            r.status
        )
        .expect("writing to a String");
    }
    let mut rep = Report::ok(&rows)?;
    rep.csv = Some(csv);
    Ok(rep)
}
