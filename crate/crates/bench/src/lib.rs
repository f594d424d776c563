//! Benchmarks for the `jcctl` pipeline; see `benches/pipeline.rs`.

use std::f64::consts::FRAC_PI_2;

use jcctl::model::{carrier_hamiltonian, red_sideband_hamiltonian};
use jcctl::{CMatrix, TruncatedSpace};

/// Carrier and red-sideband drives at both quadratures on the controlled subspace.
pub fn drives(m: usize) -> Vec<CMatrix> {
    let s = TruncatedSpace::new(m, 0);
    vec![
        carrier_hamiltonian(&s, 0.0).entries,
        carrier_hamiltonian(&s, FRAC_PI_2).entries,
        red_sideband_hamiltonian(&s, 0.0).entries,
        red_sideband_hamiltonian(&s, FRAC_PI_2).entries,
    ]
}
