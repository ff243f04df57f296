use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("rule syntax error at byte {position}: {message}")]
    RuleSyntax { position: usize, message: String },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("predicate `{0}` is not in the signature")]
    UnknownPredicate(String),

    #[error("predicate `{name}` used with arity {used}, signature declares arity {declared}")]
    ArityMismatch {
        name: String,
        used: usize,
        declared: usize,
    },

    #[error("constant `{0}` does not occur in the dataset")]
    UnknownConstant(String),

    #[error("invalid name `{0}`: names must be non-empty and contain no whitespace, parentheses or commas")]
    InvalidName(String),

    #[error("graph is not Boolean: vertex {vertex}, component {component} has label {value}")]
    NonBooleanLabel {
        vertex: usize,
        component: usize,
        value: f64,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("model and input signatures differ")]
    SignatureMismatch,

    #[error("malformed weight file: {0}")]
    WeightFormat(String),

    #[error("model is not valid: {}", join_diagnostics(.0))]
    InvalidModel(Vec<Diagnostic>),

    #[error("model is not monotonic: {}", join_diagnostics(.0))]
    NotMonotonic(Vec<Diagnostic>),

    #[error("rule body is outside the {fragment} fragment: {detail}")]
    Fragment {
        fragment: &'static str,
        detail: String,
    },

    #[error("rule is not of the restricted form: {0}")]
    NotRestricted(String),

    #[error("fact {0} is not predicted by the model")]
    NotPredicted(String),

    #[error("exhaustive enumeration needs {size} datasets, above the limit of {limit}")]
    BoundExceeded { size: u128, limit: u128 },

    #[error("dataset is not a counterexample for the rule")]
    NotAViolation,

    #[error("link prediction encoding: {0}")]
    PairEncoding(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
