//! Controllability analysis and pulse compilation for a two-level atom
//! coupled to a harmonic oscillator, driven on the carrier and the red
//! sideband.
//!
//! Layers, bottom up: [`model`] builds generators and pulse propagators,
//! [`lie`] decides controllability, [`arithmetic`] holds the number theory
//! and the pulse-index search, [`synthesis`] runs the generator cascades,
//! [`realize`] turns exponentials into pulse sequences, [`compiler`] targets
//! arbitrary unitaries and [`simulator`] scores the results.

pub mod angle;
pub mod arithmetic;
pub mod cache;
pub mod compiler;
pub mod error;
pub mod exact;
pub mod lie;
pub mod linalg;
pub mod model;
pub mod random;
pub mod realize;
pub mod simulator;
pub mod synthesis;

pub use arithmetic::{KSearch, KSearchResult, Parity};
pub use cache::KCache;
pub use compiler::{compile, fidelity, Budget, CompilationResult};
pub use error::{Error, Result};
pub use linalg::{CMatrix, JsonMatrix, C64};
pub use model::{Channel, ControlPulse, OperatorMatrix, TruncatedSpace};
pub use realize::{Context, Realization};
pub use simulator::{apply_sequence, evaluate, leakage, EvaluationReport};
pub use synthesis::{Construction, ExactElement, SynthesisMacro};
