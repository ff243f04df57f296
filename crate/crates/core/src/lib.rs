//! Monotonic mean-aggregation graph neural networks over knowledge graphs:
//! evaluation, sound rule extraction, rule soundness checking and sound
//! explanations of individual predictions.
//!
//! A model maps a dataset of unary and binary facts to the unary facts it
//! predicts ([`forward::apply`]). When all layer matrices are non-negative,
//! soundness of every rule of the form `∃P_1.⊤ ⊓ … ⊓ A_1 ⊓ … ⊑ A` is
//! decided by a single forward pass ([`soundness::check_restricted`]), which
//! in turn decides soundness of arbitrary ELUQ rules
//! ([`soundness::check_eluq`]). Every prediction has a sound explanation in
//! the counting fragment built by [`explain::explain`].

pub mod dataset;
pub mod error;
pub mod explain;
pub mod forward;
pub mod fuzz;
pub mod graph;
pub mod linkpred;
pub mod logic;
pub mod model;
pub mod signature;
pub mod soundness;

pub use dataset::{Dataset, Fact};
pub use error::{Error, Result};
pub use graph::{decode, encode, ColoredGraph, Direction};
pub use logic::{Concept, RestrictedRule, Role, Rule};
pub use model::{Activation, Layer, MagnnModel, Matrix};
pub use signature::Signature;
