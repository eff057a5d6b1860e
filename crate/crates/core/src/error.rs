use thiserror::Error;

use crate::model::VarId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the solver. Every variant maps to a stable code via
/// [`Error::code`], which the command-line front end prints on failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown variable: {0}")]
    UnknownVariable(String),
    #[error("{0:?} is not a decision")]
    NotADecision(VarId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("diagram failed validation: {0}")]
    InvalidDiagram(String),

    #[error("cardinality mismatch for {var:?}: {left} vs {right}")]
    CardinalityMismatch { var: VarId, left: usize, right: usize },
    #[error("variable {0:?} is not in the factor scope")]
    VarNotInScope(VarId),
    #[error("outcome index {index} out of range for {var:?} (cardinality {cardinality})")]
    IndexOutOfRange { var: VarId, index: usize, cardinality: usize },
    #[error("factor shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("value function is constant ({0}); there is no decision to make")]
    DegenerateValue(f64),
    #[error("multiple value nodes; merge them first")]
    MultipleValues,
    #[error("negative entry in a multiplicative value factor: {0}")]
    NegativeFactor(String),
    #[error("negative entry in a decision table: {0}")]
    NegativeEntry(String),
    #[error("negative weight multiplying the value slice: {0}")]
    NegativeWeight(String),

    #[error("table over {0:?} fits no cluster")]
    UncoveredTable(Vec<VarId>),
    #[error("query {0:?} is not contained in any cluster")]
    QueryNotCovered(Vec<VarId>),
    #[error("probability of the evidence is zero")]
    ZeroEvidenceProbability,
    #[error("cluster tree is not one-directional: {0}")]
    OneDirectionalCheckFailed(String),

    #[error("policy space of {0} deterministic policies exceeds the enumeration limit")]
    PolicySpaceTooLarge(u128),
    #[error("policy does not cover decision {0:?}")]
    IncompletePolicy(VarId),

    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownVariable(_) => "UNKNOWN_VARIABLE",
            Error::NotADecision(_) => "NOT_A_DECISION",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::InvalidDiagram(_) => "INVALID_DIAGRAM",
            Error::CardinalityMismatch { .. } => "CARDINALITY_MISMATCH",
            Error::VarNotInScope(_) => "VAR_NOT_IN_SCOPE",
            Error::IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            Error::ShapeMismatch { .. } => "SHAPE_MISMATCH",
            Error::DegenerateValue(_) => "DEGENERATE_VALUE",
            Error::MultipleValues => "MULTIPLE_VALUES",
            Error::NegativeFactor(_) => "NEGATIVE_FACTOR",
            Error::NegativeEntry(_) => "NEGATIVE_ENTRY",
            Error::NegativeWeight(_) => "NEGATIVE_WEIGHT",
            Error::UncoveredTable(_) => "UNCOVERED_TABLE",
            Error::QueryNotCovered(_) => "QUERY_NOT_COVERED",
            Error::ZeroEvidenceProbability => "ZERO_EVIDENCE_PROBABILITY",
            Error::OneDirectionalCheckFailed(_) => "ONE_DIRECTIONAL_CHECK_FAILED",
            Error::PolicySpaceTooLarge(_) => "POLICY_SPACE_TOO_LARGE",
            Error::IncompletePolicy(_) => "INCOMPLETE_POLICY",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::Parse(_) => "PARSE_ERROR",
            Error::Io(_) => "IO_ERROR",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
