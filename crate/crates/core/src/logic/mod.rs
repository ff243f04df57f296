//! Concepts, rules and their semantics over datasets.

pub mod concept;
pub mod matching;
pub mod rule;
pub mod semantics;
pub mod syntax;

pub use concept::{Concept, Fragment, Role};
pub use rule::{BodyKind, RestrictedRule, Rule};
pub use semantics::{
    immediate_consequences, program_consequences, satisfies, CompiledConcept, DatasetIndex, Interpretation,
    PredicateTable,
};
pub use syntax::{parse_concept, parse_rule, parse_rules, print_concept, print_rule};
