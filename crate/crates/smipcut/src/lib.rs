//! Two-stage stochastic mixed-integer programming with ReLU Lagrangian cuts.
//!
//! The crate is organised bottom-up:
//!
//! * [`milp`]: bounded-variable simplex and best-bound branch-and-bound.
//! * [`model`]: instance, scenario and cut types, plus worked fixtures.
//! * [`recourse`]: scenario recourse evaluation and the inner Lagrangian problems.
//! * [`oracle`]: exhaustive tables, convex envelopes, validity and facet checks.
//! * [`cuts`], [`relu`], [`strengthen`]: cut generation and LP strengthening.
//! * [`embed`]: master-problem embedding and binarization.
//! * [`driver`]: the cutting-plane loops.
//! * [`instances`]: seeded SSLP / SMRCSP / DCAP generators.

pub mod checks;
pub mod cuts;
pub mod driver;
pub mod embed;
mod error;
pub mod instances;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod recourse;
pub mod relu;
pub mod strengthen;

pub use error::{Error, Result};
