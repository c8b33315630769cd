//! Linear Implicit Quantized State System (LIQSS1) simulation.
//!
//! The crate is organised in layers:
//!
//! * [`qss`] is a generic, event-driven LIQSS1 engine. Any model implementing
//!   [`qss::QssModel`] can be integrated with it.
//! * [`machine`] holds the synchronous machine connected to an infinite bus,
//!   written once and evaluated both per-atom (for the QSS engine) and as a
//!   full state vector (for the fixed-step reference).
//! * [`reference`] is the forward Euler reference solver.
//! * [`analysis`] resamples event trajectories onto the reference grid and
//!   computes the pointwise, time-average normalized and maximum errors, update
//!   intensities and quantum-size sweeps.
//! * [`config`] and [`cli`] provide the batch front-end.

// `!(a <= b)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod machine;
pub mod qss;
pub mod reference;

pub use error::{Error, Result};
