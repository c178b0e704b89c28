//! Truncated-Fock-space toolkit for heralded quantum state generation and
//! pulsed-homodyne tomography.
//!
//! The crate covers the full loop from source physics to reconstructed state:
//!
//! * [`fock`]: density matrices, Fock kets and operators on a truncated basis;
//! * [`herald`]: two-mode squeezed vacuum, loss channels, photon-number-resolving
//!   detection as a POVM, and the heralded conditional signal state;
//! * [`homodyne`]: quadrature probability densities and seeded Monte-Carlo
//!   sampling of homodyne outcomes;
//! * [`pipeline`]: ingestion of pulsed trace events: threshold classification,
//!   afterpulse veto, shot-noise calibration and quadrature extraction;
//! * [`tomography`]: iterative maximum-likelihood density-matrix reconstruction;
//! * [`analysis`]: Wigner functions, photon-number distributions and bootstrap
//!   confidence intervals;
//! * [`acceptance`]: the self-check suite wired to the `selftest` CLI command.
//!
//! All quadratures use the vacuum-variance-1/2 convention, x = (a + a†)/√2.
//! Heavy inner loops (sampling, likelihood accumulation, Wigner grids, bootstrap
//! replicates) run data-parallel through [`exec::Exec`] when the `parallel`
//! feature is enabled; results are bit-identical to the sequential fallback.

// Negated comparisons like !(x > 0.0) are used to reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod error;
pub mod exec;
pub mod fock;
pub mod herald;
pub mod homodyne;
pub mod jsonfmt;
pub mod pipeline;
pub mod tomography;

pub use error::{Error, Result};
pub use exec::Exec;
pub use fock::{DensityMatrix, FockCutoff, PureState};
pub use herald::HeraldScenario;
pub use homodyne::QuadratureRecord;
pub use tomography::{MleConfig, MleResult};

