//! Finite-truncation construction of the error-correction scheme for a qubit
//! coupled to a quantum oscillator.
//!
//! The pipeline is
//! [`model`] (dressed states, thresholds, `H1 + H2 + H3`) →
//! [`coherent`] (Gazeau-Klauder families and moment quadratures) →
//! [`povm`] (discretized `M = M1 + M2 + M3`) →
//! [`graph`] (operator graph and anticlique check) and
//! [`channel`] (the generalized channel, its measurement part and the
//! complementary channel).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod coherent;
pub mod error;
pub mod graph;
pub mod model;
pub mod operator;
pub mod povm;
pub mod sample;
pub mod schema;

/// Crate version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use model::{Branch, DressedBasis, Model, ModelParams, SpectrumTable, SubspaceSplit};
pub use operator::{CMat, CVec, OperatorSubspace, Projector};
