//! Truncated interaction-frame model: control Hamiltonians and single-pulse
//! propagators for carrier and red-sideband drives.
//!
//! Basis ordering is `idx(level, spin) = 2·level + spin` with spin 0 = ↓ and
//! spin 1 = ↑. Carrier bonds couple `(2l, 2l+1)`; the red-sideband bond at
//! level `p ≥ 1` couples `|↑⟩|p-1⟩ = 2p-1` to `|↓⟩|p⟩ = 2p` with strength √p.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle::SqrtRatio;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64, I};

/// Physical regime parameters. Only used to validate that the two-frequency
/// model applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_c: f64,
    pub omega_z: f64,
    pub eta: f64,
}

/// Upper bound on the Lamb-Dicke parameter accepted by [`ModelParams::new`].
pub const LAMB_DICKE_LIMIT: f64 = 0.1;

impl ModelParams {
    pub fn new(omega_c: f64, omega_z: f64, eta: f64) -> Result<Self> {
        if !(omega_z > 0.0 && omega_c > omega_z) {
            return Err(Error::InvalidArgument(format!(
                "need omega_c > omega_z > 0, got omega_c={omega_c}, omega_z={omega_z}"
            )));
        }
        if !(eta > 0.0 && eta < LAMB_DICKE_LIMIT) {
            return Err(Error::InvalidArgument(format!(
                "Lamb-Dicke parameter {eta} outside (0, {LAMB_DICKE_LIMIT})"
            )));
        }
        Ok(ModelParams {
            omega_c,
            omega_z,
            eta,
        })
    }

    pub fn red_sideband_frequency(&self) -> f64 {
        self.omega_c - self.omega_z
    }
}

/// Spin-down / spin-up label of a basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Down = 0,
    Up = 1,
}

/// Controlled phonon levels `0..=m_max` plus `n_buffer` simulated levels above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncatedSpace {
    pub m_max: usize,
    pub n_buffer: usize,
}

pub const DEFAULT_BUFFER: usize = 1;

impl TruncatedSpace {
    pub fn new(m_max: usize, n_buffer: usize) -> Self {
        TruncatedSpace { m_max, n_buffer }
    }

    /// Controlled levels with the default single buffer level.
    pub fn buffered(m_max: usize) -> Self {
        Self::new(m_max, DEFAULT_BUFFER)
    }

    pub fn levels(&self) -> usize {
        self.m_max + self.n_buffer + 1
    }

    pub fn dim(&self) -> usize {
        2 * self.levels()
    }

    /// Dimension `N = 2(m_max + 1)` of the controlled subspace.
    pub fn controlled_dim(&self) -> usize {
        2 * (self.m_max + 1)
    }

    pub fn idx(level: usize, spin: Spin) -> usize {
        2 * level + spin as usize
    }

    /// Same space without buffer levels.
    pub fn controlled(&self) -> Self {
        Self::new(self.m_max, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Carrier,
    Red,
}

/// One laser pulse. `k` is set for restricted red-sideband pulses, where
/// `theta = k π / √(m+1)`; it lets propagators close the boundary block
/// exactly instead of to within `k · 1e-16`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    pub channel: Channel,
    pub theta: f64,
    pub phi: f64,
    pub k: Option<u64>,
}

fn wrap_phase(phi: f64) -> f64 {
    let x = phi.rem_euclid(2.0 * PI);
    if x >= 2.0 * PI {
        0.0
    } else {
        x
    }
}

impl ControlPulse {
    pub fn carrier(theta: f64, phi: f64) -> Self {
        assert!(theta >= 0.0, "pulse angle must be nonnegative");
        ControlPulse {
            channel: Channel::Carrier,
            theta,
            phi: wrap_phase(phi),
            k: None,
        }
    }

    /// Unrestricted red-sideband pulse; generally leaks out of the controlled subspace.
    pub fn red(theta: f64, phi: f64) -> Self {
        assert!(theta >= 0.0, "pulse angle must be nonnegative");
        ControlPulse {
            channel: Channel::Red,
            theta,
            phi: wrap_phase(phi),
            k: None,
        }
    }

    /// Restricted red-sideband pulse `θ = k π / √(m+1)`.
    pub fn red_restricted(m_max: usize, k: u64, phi: f64) -> Self {
        ControlPulse {
            channel: Channel::Red,
            theta: restricted_theta(m_max, k),
            phi: wrap_phase(phi),
            k: Some(k),
        }
    }

    /// The pulse undoing this one: same channel and angle, phase shifted by π.
    pub fn mirror(&self) -> Self {
        ControlPulse {
            phi: wrap_phase(self.phi + PI),
            ..*self
        }
    }

    pub fn is_restricted(&self) -> bool {
        self.channel == Channel::Red && self.k.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Generator,
    Unitary,
}

/// Unitarity tolerance (max-entry norm) for [`OperatorMatrix::unitary`].
pub const UNITARY_TOL: f64 = 1e-12;

/// A dense matrix tagged as a skew-Hermitian generator or a unitary propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub entries: CMatrix,
    pub kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn generator(entries: CMatrix) -> Result<Self> {
        linalg::check_square(&entries)?;
        let scale = linalg::max_abs(&entries).max(1.0);
        let defect = linalg::skew_defect(&entries);
        if defect > 1e-12 * scale {
            return Err(Error::NotSkewHermitian(defect));
        }
        let tr = linalg::trace(&entries).norm();
        if tr > 1e-12 * scale * entries.nrows() as f64 {
            return Err(Error::InvalidArgument(format!(
                "generator has nonzero trace {tr:.3e}"
            )));
        }
        Ok(OperatorMatrix {
            entries,
            kind: OperatorKind::Generator,
        })
    }

    pub fn unitary(entries: CMatrix) -> Result<Self> {
        Self::unitary_with_tol(entries, UNITARY_TOL)
    }

    pub fn unitary_with_tol(entries: CMatrix, tol: f64) -> Result<Self> {
        linalg::check_square(&entries)?;
        let defect = linalg::unitarity_defect(&entries);
        if defect > tol {
            return Err(Error::NotUnitary(defect));
        }
        Ok(OperatorMatrix {
            entries,
            kind: OperatorKind::Unitary,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// 2x2 block `[[0, i e^{-iφ}], [i e^{iφ}, 0]]` placed at `(lo, hi)`.
fn put_bond(h: &mut CMatrix, lo: usize, hi: usize, weight: f64, phi: f64) {
    h[(hi, lo)] = I * linalg::cis(phi) * weight;
    h[(lo, hi)] = I * linalg::cis(-phi) * weight;
}

/// Index pair `(lo, hi)` of the red bond at level `p ≥ 1`.
pub fn red_bond(p: usize) -> (usize, usize) {
    (2 * p - 1, 2 * p)
}

/// Index pair of the carrier bond at level `l`.
pub fn carrier_bond(l: usize) -> (usize, usize) {
    (2 * l, 2 * l + 1)
}

/// Carrier Hamiltonian at phase `φ`; `φ = 0` gives H₁ and `φ = π/2` gives H₂.
pub fn carrier_hamiltonian(space: &TruncatedSpace, phi: f64) -> OperatorMatrix {
    let mut h = linalg::zeros(space.dim());
    for l in 0..space.levels() {
        let (lo, hi) = carrier_bond(l);
        put_bond(&mut h, lo, hi, 1.0, phi);
    }
    OperatorMatrix {
        entries: h,
        kind: OperatorKind::Generator,
    }
}

/// Red-sideband Hamiltonian at phase `φ`; `φ = 0` gives H₃ and `φ = π/2` gives H₄.
pub fn red_sideband_hamiltonian(space: &TruncatedSpace, phi: f64) -> OperatorMatrix {
    let mut h = linalg::zeros(space.dim());
    for p in 1..space.levels() {
        let (lo, hi) = red_bond(p);
        put_bond(&mut h, lo, hi, (p as f64).sqrt(), phi);
    }
    OperatorMatrix {
        entries: h,
        kind: OperatorKind::Generator,
    }
}

/// The Hamiltonian a pulse drives.
pub fn pulse_hamiltonian(space: &TruncatedSpace, pulse: &ControlPulse) -> OperatorMatrix {
    match pulse.channel {
        Channel::Carrier => carrier_hamiltonian(space, pulse.phi),
        Channel::Red => red_sideband_hamiltonian(space, pulse.phi),
    }
}

/// `θ = k π / √(m_max + 1)`, the red-pulse angle that closes the boundary block.
pub fn restricted_theta(m_max: usize, k: u64) -> f64 {
    k as f64 * PI / ((m_max + 1) as f64).sqrt()
}

/// Checked variant accepting a signed `k`.
pub fn restricted_red_theta(space: &TruncatedSpace, k: i64) -> Result<f64> {
    if k < 0 {
        return Err(Error::InvalidArgument(format!(
            "restricted pulse index k must be nonnegative, got {k}"
        )));
    }
    Ok(restricted_theta(space.m_max, k as u64))
}

/// 2x2 rotation `exp(a · [[0, i e^{-iφ}], [i e^{iφ}, 0]])`.
pub(crate) fn bond_rotation(a_cos: f64, a_sin: f64, phi: f64) -> [[C64; 2]; 2] {
    let diag = c(a_cos, 0.0);
    [
        [diag, I * linalg::cis(-phi) * a_sin],
        [I * linalg::cis(phi) * a_sin, diag],
    ]
}

/// Per-bond `(lo, hi, cos, sin)` data of a pulse on `space`.
///
/// Both drives are direct sums of 2x2 blocks, so the propagator is the
/// direct sum of closed-form block rotations; off-block entries are exactly
/// zero. Restricted red pulses use exact angle reduction.
pub fn pulse_blocks(space: &TruncatedSpace, pulse: &ControlPulse) -> Result<Vec<(usize, usize, f64, f64)>> {
    let mut out = Vec::with_capacity(space.levels());
    match pulse.channel {
        Channel::Carrier => {
            let (s, co) = pulse.theta.sin_cos();
            for l in 0..space.levels() {
                let (lo, hi) = carrier_bond(l);
                out.push((lo, hi, co, s));
            }
        }
        Channel::Red => {
            if let Some(k) = pulse.k {
                let expected = restricted_theta(space.m_max, k);
                if (expected - pulse.theta).abs() > 1e-9 * expected.max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "restricted pulse k={k} expects theta={expected}, got {} (cutoff m={})",
                        pulse.theta, space.m_max
                    )));
                }
                let denom = (space.m_max + 1) as u64;
                for p in 1..space.levels() {
                    let a = SqrtRatio::new(p as u64, denom).angle(k);
                    let (lo, hi) = red_bond(p);
                    let (s, co) = if a == 0.0 {
                        (0.0, 1.0)
                    } else if a == PI {
                        (0.0, -1.0)
                    } else {
                        a.sin_cos()
                    };
                    out.push((lo, hi, co, s));
                }
            } else {
                for p in 1..space.levels() {
                    let (s, co) = (pulse.theta * (p as f64).sqrt()).sin_cos();
                    let (lo, hi) = red_bond(p);
                    out.push((lo, hi, co, s));
                }
            }
        }
    }
    Ok(out)
}

/// Left-multiply `u` in place by the propagator of `pulse`.
pub fn apply_pulse(space: &TruncatedSpace, pulse: &ControlPulse, u: &mut CMatrix) -> Result<()> {
    for (lo, hi, co, s) in pulse_blocks(space, pulse)? {
        let b = bond_rotation(co, s, pulse.phi);
        for col in 0..u.ncols() {
            let x = u[(lo, col)];
            let y = u[(hi, col)];
            u[(lo, col)] = b[0][0] * x + b[0][1] * y;
            u[(hi, col)] = b[1][0] * x + b[1][1] * y;
        }
    }
    Ok(())
}

/// Propagator `exp(θ H(φ))` of a single pulse on the full simulated space.
pub fn pulse_unitary(space: &TruncatedSpace, pulse: &ControlPulse) -> Result<OperatorMatrix> {
    let mut u = linalg::identity(space.dim());
    apply_pulse(space, pulse, &mut u)?;
    OperatorMatrix::unitary(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, expm_skew};
    use std::f64::consts::FRAC_PI_2;

    fn cm(rows: &[&[(f64, f64)]]) -> CMatrix {
        let n = rows.len();
        CMatrix::from_fn(n, n, |r, col| c(rows[r][col].0, rows[r][col].1))
    }

    #[test]
    fn carrier_phi_zero_is_h1() {
        let h = carrier_hamiltonian(&TruncatedSpace::new(1, 0), 0.0).entries;
        let expected = (linalg::unit(4, 0, 1) + linalg::unit(4, 1, 0) + linalg::unit(4, 2, 3) + linalg::unit(4, 3, 2)) * I;
        assert!(max_abs(&(h - expected)) < 1e-15);
    }

    #[test]
    fn carrier_phi_half_pi_is_h2() {
        let h = carrier_hamiltonian(&TruncatedSpace::new(1, 0), FRAC_PI_2).entries;
        let expected = linalg::real_pair(4, 0, 1) + linalg::real_pair(4, 2, 3);
        assert!(max_abs(&(h - expected)) < 1e-15);
    }

    #[test]
    fn single_level_carrier() {
        let h = carrier_hamiltonian(&TruncatedSpace::new(0, 0), 0.0).entries;
        let e = cm(&[&[(0.0, 0.0), (0.0, 1.0)], &[(0.0, 1.0), (0.0, 0.0)]]);
        assert!(max_abs(&(h - e)) < 1e-15);
    }

    #[test]
    fn red_phi_zero_top_block_is_h3() {
        let h = red_sideband_hamiltonian(&TruncatedSpace::new(1, 0), 0.0).entries;
        assert!(max_abs(&(h - linalg::imag_pair(4, 1, 2))) < 1e-15);
    }

    #[test]
    fn red_phi_half_pi_has_minus_sqrt2() {
        let h = red_sideband_hamiltonian(&TruncatedSpace::new(2, 0), FRAC_PI_2).entries;
        assert!((h[(4, 3)] - c(-2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((h[(3, 4)] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lowest_rung_coupling() {
        let h = red_sideband_hamiltonian(&TruncatedSpace::new(0, 1), 0.0).entries;
        assert!(max_abs(&(h - linalg::imag_pair(4, 1, 2))) < 1e-15);
    }

    #[test]
    fn generators_are_skew_hermitian_and_traceless() {
        let s = TruncatedSpace::new(3, 2);
        for phi in [0.0, 0.3, 1.7, 4.0] {
            for h in [carrier_hamiltonian(&s, phi), red_sideband_hamiltonian(&s, phi)] {
                assert_eq!(linalg::skew_defect(&h.entries), 0.0);
                assert_eq!(linalg::trace(&h.entries).norm(), 0.0);
            }
        }
    }

    #[test]
    fn carrier_is_linear_in_phase() {
        let s = TruncatedSpace::new(2, 1);
        let h1 = carrier_hamiltonian(&s, 0.0).entries;
        let h2 = carrier_hamiltonian(&s, FRAC_PI_2).entries;
        for phi in [0.1, 1.0, 2.5, 5.9] {
            let h = carrier_hamiltonian(&s, phi).entries;
            let lin = &h1 * c(phi.cos(), 0.0) + &h2 * c(phi.sin(), 0.0);
            assert!(max_abs(&(h - lin)) < 1e-15);
        }
    }

    #[test]
    fn restricted_red_pulse_matches_displayed_matrix() {
        // the (-1)^k corner comes from the boundary bond into the buffer level
        let space = TruncatedSpace::buffered(1);
        for k in 1..6u64 {
            let full = pulse_unitary(&space, &ControlPulse::red_restricted(1, k, FRAC_PI_2)).unwrap().entries;
            let u = linalg::restrict(&full, 4);
            let a = k as f64 * PI / 2f64.sqrt();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let e = cm(&[
                &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
                &[(0.0, 0.0), (a.cos(), 0.0), (a.sin(), 0.0), (0.0, 0.0)],
                &[(0.0, 0.0), (-a.sin(), 0.0), (a.cos(), 0.0), (0.0, 0.0)],
                &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (sign, 0.0)],
            ]);
            assert!(max_abs(&(u - e)) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn zero_angle_is_identity() {
        let s = TruncatedSpace::new(2, 1);
        let u = pulse_unitary(&s, &ControlPulse::carrier(0.0, 1.0)).unwrap().entries;
        assert_eq!(u, linalg::identity(s.dim()));
    }

    #[test]
    fn carrier_quarter_turn_single_level() {
        let s = TruncatedSpace::new(0, 0);
        let u = pulse_unitary(&s, &ControlPulse::carrier(FRAC_PI_2, 0.0)).unwrap().entries;
        let e = cm(&[&[(0.0, 0.0), (0.0, 1.0)], &[(0.0, 1.0), (0.0, 0.0)]]);
        assert!(max_abs(&(u - e)) < 1e-15);
    }

    #[test]
    fn closed_form_agrees_with_eigendecomposition() {
        let s = TruncatedSpace::new(3, 1);
        for pulse in [
            ControlPulse::carrier(0.7, 1.1),
            ControlPulse::red(1.3, 2.0),
            ControlPulse::red_restricted(3, 5, 0.4),
        ] {
            let h = pulse_hamiltonian(&s, &pulse).entries;
            let e = expm_skew(&h, pulse.theta);
            let u = pulse_unitary(&s, &pulse).unwrap().entries;
            assert!(max_abs(&(u - e)) < 1e-12);
        }
    }

    #[test]
    fn mirror_is_inverse() {
        let s = TruncatedSpace::new(2, 1);
        for pulse in [ControlPulse::carrier(2.1, 0.3), ControlPulse::red_restricted(2, 17, 5.0)] {
            let mut u = linalg::identity(s.dim());
            apply_pulse(&s, &pulse, &mut u).unwrap();
            apply_pulse(&s, &pulse.mirror(), &mut u).unwrap();
            assert!(max_abs(&(u - linalg::identity(s.dim()))) < 1e-10);
        }
    }

    #[test]
    fn restricted_theta_values() {
        let s1 = TruncatedSpace::new(1, 0);
        assert!((restricted_red_theta(&s1, 1).unwrap() - PI / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(restricted_red_theta(&s1, 0).unwrap(), 0.0);
        let s4 = TruncatedSpace::new(4, 0);
        assert!((restricted_red_theta(&s4, 3).unwrap() - 3.0 * PI / 5f64.sqrt()).abs() < 1e-15);
        assert!(restricted_red_theta(&s4, -1).is_err());
    }

    #[test]
    fn restricted_pulse_rejects_inconsistent_theta() {
        let s = TruncatedSpace::new(2, 1);
        let mut p = ControlPulse::red_restricted(1, 3, 0.0);
        assert!(pulse_unitary(&s, &p).is_err());
        p.k = None;
        assert!(pulse_unitary(&s, &p).is_ok());
    }

    #[test]
    fn model_params_gate() {
        assert!(ModelParams::new(10.0, 1.0, 0.05).is_ok());
        assert!(ModelParams::new(1.0, 10.0, 0.05).is_err());
        assert!(ModelParams::new(10.0, 1.0, 0.2).is_err());
    }
}
