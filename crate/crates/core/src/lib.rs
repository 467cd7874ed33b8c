//! Numerical toolkit for higher-order fractional variational and optimal
//! control problems with a delayed state.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] holds the uniform delay-aligned grid and sampled functions.
//! * [`fracops`] implements Riemann-Liouville integrals, Riemann-Liouville and
//!   Caputo derivatives (left and right) on uniform grids, the gamma function
//!   and the analytic oracles for constants and powers. Operators are
//!   registered by name in an [`fracops::OperatorRegistry`].
//! * [`ibp`] checks the fractional integration-by-parts identities, including
//!   the tail-kernel corrections that appear when the interval is split.
//! * [`expr`] is a small expression language used to describe Lagrangians,
//!   performance indices, constraints and history functions.
//! * [`variational`] evaluates the delayed functional, its first variation and
//!   the Euler-Lagrange / transversality residuals, and minimises the
//!   functional by direct transcription.
//! * [`control`] adds a control channel and an equality constraint handled by
//!   an augmented Lagrangian loop.
//! * [`convergence`] runs grid-refinement studies through a registry of named
//!   checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod convergence;
pub mod csv;
pub mod error;
pub mod expr;
pub mod fd;
pub mod fracops;
pub mod gamma;
pub mod grid;
pub mod ibp;
pub mod optim;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFunction, Segment};
