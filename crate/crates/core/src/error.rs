use thiserror::Error;

use crate::config::Violation;
use crate::report::ReflectionVerdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("column {column} ({name}) has an infinite bound")]
    InfiniteBound { column: usize, name: String },
    #[error("row {row} references unknown column {column}")]
    UnknownColumn { row: String, column: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("numeric breakdown after {iterations} simplex iterations: {reason}")]
    NumericBreakdown { iterations: usize, reason: String },
    #[error("brute force enumeration supports at most {limit} binary columns, instance has {found}")]
    TooManyBinaries { limit: usize, found: usize },
    #[error("column {0} is integer but not binary; brute force only enumerates binaries")]
    NonBinaryInteger(usize),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("configuration has {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidConfig(Vec<Violation>),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("solution vector has {found} values, instance has {expected} columns")]
    WrongLength { expected: usize, found: usize },
    #[error("integrity check failed: row {row} violated by {violation:e}")]
    Integrity { row: String, violation: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("transfer references unknown site `{0}`")]
    UnknownSite(String),
    #[error("transfer references week {0} outside the horizon")]
    UnknownWeek(u32),
    #[error("transfer from `{0}` to itself")]
    SelfTransfer(String),
    #[error("transfer quantity {0} is negative or not finite")]
    BadQuantity(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("unknown run `{0}`")]
    RunNotFound(String),
    #[error("unknown role `{0}`; expected analyst, manager or executive")]
    UnknownRole(String),
    #[error("bad report request: {0}")]
    BadRequest(String),
    #[error("context failed reflection after {} revision(s); missing: {}", .0.revisions, .0.missing.join(", "))]
    Reflection(ReflectionVerdict),
    #[error("external generation setup: {0}")]
    Setup(String),
}
