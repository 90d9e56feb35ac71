//! Bouchaud trap model on the positive integers with slowly varying trap
//! distributions.
//!
//! The crate is organised around the life cycle of a desk-scale experiment:
//!
//! * [`logreal`] — extended-range arithmetic for trap depths stored in log
//!   space, so magnitudes like `exp(n^{1/gamma})` never overflow.
//! * [`tails`] — slowly varying tail families (`L`, its inverse, the
//!   second-order rate `g`, the derived rate `d`), the localisation count
//!   `N`, trap sampling, and numerical assumption checkers.
//! * [`landscape`] — seeded i.i.d. trap landscapes with streaming scans:
//!   records, partial sums, order-statistic tail sums, level exceedences
//!   and hyperbolic exceedences.
//! * [`localise`] — the localisation-set construction (inner/outer record
//!   sites, chaining, boundaries, the set itself), relocalisation times and
//!   audits, near-record sites and the favourable-event detector.
//! * [`quenched`] — exact quenched laws of the walk on finite segments via
//!   a symmetric tridiagonal spectral solver, hitting-time CDFs, balance
//!   and restricted mixing times, plus a Monte Carlo path simulator used as
//!   an independent oracle.
//! * [`harness`] — experiment drivers, deterministic seeding, CSV/JSON
//!   persistence and the command line interface.
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one exercises a major capability end to end.

pub mod error;
pub mod harness;
pub mod landscape;
pub mod localise;
pub mod logreal;
pub mod numeric;
pub mod quenched;
pub mod tails;

pub use error::{Error, Result};
pub use logreal::LogMagnitude;
pub use tails::{AuxFunction, TailFamily, TailModel};
