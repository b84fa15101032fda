//! Run time assurance toolkit.
//!
//! A library of safety filters that sit between a primary controller and a
//! plant: Simplex switching filters and active-set-invariance quadratic
//! program filters, in deterministic, robust, and reachability-certified
//! variants, together with the numerics they depend on (plant models,
//! invariant sets, fixed-step integration with sensitivity propagation, a
//! small dense projection solver, and mixed-monotone reachable-set
//! over-approximation) and a scenario harness with nuisance metrics.

pub mod dynamics;
pub mod error;
pub mod filters;
pub mod harness;
pub mod integrate;
pub mod linalg;
pub mod plants;
pub mod qp;
pub mod reach;
pub mod scenarios;
pub mod sets;
pub mod validation;

pub use error::{Error, Result};
