//! Pseudo-spectral tools for the regularized dissipative convection equation
//! `u_t - Delta (I - Delta)^{-s1} u = -div (I - Delta)^{-s2} (u^{theta+1} b)`
//! on a periodic box.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod field;
pub mod greens;
pub mod grid;
pub mod inequalities;
pub mod norms;
pub mod random;
pub mod solver;
pub mod symbols;

pub use decay::{DecayConfig, DecayReport, DecaySeries, FrequencySplit, InitialData, PowerFit};
pub use error::{Error, Result};
pub use field::{DealiasMask, Field, SpectralField};
pub use greens::{CutoffBank, GreensKernel, TimeFrequencyCutoff};
pub use grid::{Grid, GridSpec, MAX_DIM};
pub use inequalities::{InequalitySuiteConfig, InequalitySummary};
pub use norms::{NormKind, NormValue};
/// Version of the core library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use solver::{
    HypothesisViolation, Integrator, ModelParams, NormRecord, PicardConfig, PicardResult,
    SolverConfig, Trajectory,
};
