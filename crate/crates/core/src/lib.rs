//! Statistics engine for weakly nonlinear three-wave and four-wave systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: Fourier lattice bookkeeping and resonance search.
//! - [`systems`]: dispersion laws and interaction coefficients.
//! - [`dynamics`]: interaction-representation equations of motion and RK4 integration.
//! - [`perturbation`]: time kernels and the first/second weak-nonlinearity iterates.
//! - [`statistics`]: random-phase ensembles and their measured statistics.
//! - [`kinetics`]: collision rates and the kinetic equation.
//! - [`onemode`]: one-mode moment hierarchy and probability-flux solvers.
//! - [`pbp`]: joint multi-mode PDF flux operators on small tensor grids.
//! - [`config`] / [`experiment`]: declarative experiment configs and runners.
//! - [`verify`]: the acceptance checks, shared by tests and the `verify` subcommand.

// `!(x > 0.0)` is used deliberately so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod expint;
pub mod experiment;
pub mod kinetics;
pub mod lattice;
pub mod onemode;
pub mod output;
pub mod pbp;
pub mod perturbation;
pub mod rng;
pub mod statistics;
pub mod systems;
pub mod verify;
pub mod dynamics;

pub use error::{Result, WtError};
pub use lattice::{FourierLattice, Quartet, Triad, Wavevector};
pub use systems::{Order, SystemKind, WaveSystem};
pub use dynamics::{FrequencyShift, WaveField};
