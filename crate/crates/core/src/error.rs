use thiserror::Error;

use crate::syntax::RangeDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("duplicate rule name `{0}`")]
    DuplicateRuleName(String),
}

/// Errors raised before or while running a program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("program is not range-restricted: {}", join_diagnostics(.0))]
    NotRangeRestricted(Vec<RangeDiagnostic>),

    #[error("priorities required: rule `{0}` has no priority")]
    MissingPriority(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("program is not range-restricted: {}", join_diagnostics(.0))]
    NotRangeRestricted(Vec<RangeDiagnostic>),

    #[error("rule `{0}` is trivially pathological")]
    TriviallyPathological(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("candidate constraint `{0}` left in a quiescent store")]
    ResidualCandidateConstraint(String),

    #[error("constraint `{0}` carries no mode tag")]
    MissingTag(String),
}

/// Anything that stops a comparison before a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Encode(#[from] EncodeError),
}

fn join_diagnostics(ds: &[RangeDiagnostic]) -> String {
    ds.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
