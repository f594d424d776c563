//! Propagation of pulse sequences on the buffered ladder and leakage scoring.

use serde::{Deserialize, Serialize};

use crate::compiler::fidelity;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{apply_pulse, ControlPulse, TruncatedSpace};

/// `U_last ··· U_first`; the first pulse in `seq` acts first.
pub fn apply_sequence(space: &TruncatedSpace, seq: &[ControlPulse]) -> Result<CMatrix> {
    let mut u = linalg::identity(space.dim());
    for p in seq {
        apply_pulse(space, p, &mut u)?;
    }
    Ok(u)
}

/// Operator norm of the block of `u` mapping buffer levels into the
/// controlled subspace of cutoff `m`.
pub fn leakage(u: &CMatrix, m: usize) -> Result<f64> {
    let n = linalg::check_square(u)?;
    let nc = 2 * (m + 1);
    if n <= nc {
        return Err(Error::InvalidArgument(format!(
            "leakage needs buffer levels: dimension {n} does not exceed the controlled dimension {nc}"
        )));
    }
    let block = u.view((0, nc), (nc, n - nc)).into_owned();
    Ok(block.singular_values().max())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(with = "linalg::json_matrix")]
    pub achieved: CMatrix,
    #[serde(with = "linalg::json_matrix")]
    pub restricted: CMatrix,
    pub leakage: f64,
    pub fidelity_vs_target: f64,
    pub unitarity_defect: f64,
}

/// Evaluate with one buffer level.
pub fn evaluate(seq: &[ControlPulse], target: &CMatrix, m: usize) -> Result<EvaluationReport> {
    evaluate_with_buffer(seq, target, m, 1)
}

pub fn evaluate_with_buffer(
    seq: &[ControlPulse],
    target: &CMatrix,
    m: usize,
    n_buffer: usize,
) -> Result<EvaluationReport> {
    if n_buffer == 0 {
        return Err(Error::InvalidArgument("simulation needs at least one buffer level".into()));
    }
    let space = TruncatedSpace::new(m, n_buffer);
    let nc = space.controlled_dim();
    let t = linalg::check_square(target)?;
    if t != nc {
        return Err(Error::DimensionMismatch(nc, t));
    }
    let achieved = apply_sequence(&space, seq)?;
    let restricted = linalg::restrict(&achieved, nc);
    Ok(EvaluationReport {
        leakage: leakage(&achieved, m)?,
        fidelity_vs_target: fidelity(target, &restricted)?,
        unitarity_defect: linalg::unitarity_defect(&achieved),
        restricted,
        achieved,
    })
}

/// Controlled block of a sequence's propagator.
pub fn controlled_block(seq: &[ControlPulse], m: usize, n_buffer: usize) -> Result<CMatrix> {
    let space = TruncatedSpace::new(m, n_buffer);
    Ok(linalg::restrict(&apply_sequence(&space, seq)?, space.controlled_dim()))
}

/// `‖restricted(seq) − ideal‖` in operator norm, simulated with one buffer level.
pub fn measured_error(seq: &[ControlPulse], ideal: &CMatrix, m: usize) -> Result<f64> {
    let r = controlled_block(seq, m, 1)?;
    linalg::check_same_dim(&r, ideal)?;
    Ok(linalg::op_norm(&(r - ideal)))
}
