//! Simulation and analysis of Λ-coalescents.
//!
//! Two constructions are provided side by side:
//!
//! * [`chain`]: the restriction Π⁽ⁿ⁾ as an exact continuous-time Markov chain
//!   with merger rates λ_{i,k}, plus a rate-matrix / matrix-exponential oracle
//!   for small n;
//! * [`flow`]: the Poisson-driven composition of simple bridges and its
//!   paintbox partitions, with exact hole and dust bookkeeping.
//!
//! [`measures`] classifies driving measures into the four behaviour regimes,
//! [`embed`] builds the coalescent induced on block representatives, and
//! [`harness`] runs reproducible Monte Carlo campaigns.

pub mod bridge;
pub mod chain;
pub mod embed;
pub mod flow;
pub mod harness;
pub mod kahan;
pub mod measures;
pub mod numfmt;
pub mod partition;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use measures::{Atom, MeasureError, MeasureSpec};
