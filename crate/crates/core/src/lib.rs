//! Random quantum circuits drawn from the unitary circuit ensemble (UCE) and
//! the statistics needed to measure how quickly they approach the circular
//! unitary ensemble (CUE).
//!
//! The crate is organised bottom-up:
//!
//! * [`gateset`] samples Haar `U(2)` gates, CNOTs and whole circuits from
//!   deterministic per-realization random streams.
//! * [`column`] propagates the first column of the circuit unitary with
//!   bitwise kernels, plus a dense full-matrix oracle for small registers.
//! * [`cue`] holds the closed-form CUE reference statistics and an exact
//!   Haar sampler.
//! * [`stats`] accumulates histograms, moments and correlators over an
//!   ensemble and turns them into distances from the CUE values.
//! * [`ensemble`] drives many realizations in parallel and produces
//!   convergence curves `D(n_g)`.
//! * [`scaling`] extracts `n*` from curves and fits the candidate scaling
//!   laws.
//! * [`moment_op`] builds the two-copy moment operator of the gate set and
//!   computes its spectral gap.

pub mod column;
pub mod cue;
pub mod ensemble;
pub mod error;
pub mod gateset;
pub mod moment_op;
pub mod scaling;
pub mod stats;

pub use error::{Error, Result};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;
