use thiserror::Error;

use crate::name::Name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported requirement `:{0}`")]
    UnsupportedRequirement(String),
    #[error("unknown type `{0}`")]
    UnknownType(Name),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(Name),
    #[error("predicate `{name}` takes {expected} arguments, got {got}")]
    PredicateArity { name: Name, expected: usize, got: usize },
    #[error("action `{name}` takes {expected} arguments, got {got}")]
    ActionArity { name: Name, expected: usize, got: usize },
    #[error("duplicate action `{0}`")]
    DuplicateAction(Name),
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(Name),
    #[error("unknown action `{0}`")]
    UnknownAction(Name),
    #[error("unknown object `{0}`")]
    UnknownObject(Name),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("free variable `{0}` in a condition that must be ground")]
    FreeVariable(Name),
    #[error("object `{object}` is not of type `{expected}`")]
    TypeMismatch { object: Name, expected: Name },
    #[error("`or` is not allowed inside an effect")]
    OrInEffect,
    #[error("{0}")]
    IllFormed(String),
}

impl PddlError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        PddlError::Syntax { line, col, msg: msg.into() }
    }
}
