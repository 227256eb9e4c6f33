//! Numerical core for straight-line stochastic interpolants.
//!
//! The crate is `no_std` (with `alloc`) so the algorithms can be embedded
//! anywhere; the `parallel` feature pulls in `std` and rayon for the path
//! and trajectory loops without changing any output.
//!
//! Modules, bottom-up:
//!
//! * [`measures`]: Gaussian, uniform and mixture measures, support geometry
//!   and Frostman constants.
//! * [`interpolants`]: schedules, couplings, the Gaussian straight-line
//!   builders, path ensembles and their finite-difference derivatives.
//! * [`velocity`]: closed-form Gaussian conditional statistics, kernel
//!   estimators on ensembles and the PDE residual diagnostics.
//! * [`flow`]: fixed-step flow integration, straightness and pushforward checks.
//! * [`nogo`]: up-crossings, modulus of continuity, concentration envelopes and
//!   the impossibility certificate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod float;
pub mod linalg;
pub mod special;
pub mod rng;
mod par;

pub mod measures;
pub mod interpolants;
pub mod velocity;
pub mod flow;
pub mod nogo;

pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
