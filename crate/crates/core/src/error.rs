use std::fmt;

use thiserror::Error;

use crate::shift_analysis::ShiftStatus;

/// What went wrong on a particular line of an instance, distribution or
/// matching file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Malformed(String),
    DuplicateEntry(String),
    NonMutualPair { boy: usize, girl: usize },
    OutOfRange(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Malformed(msg) => write!(f, "malformed line: {msg}"),
            ParseErrorKind::DuplicateEntry(msg) => write!(f, "duplicate entry: {msg}"),
            ParseErrorKind::NonMutualPair { boy, girl } => {
                write!(f, "non-mutual pair b{} g{}", boy + 1, girl + 1)
            }
            ParseErrorKind::OutOfRange(msg) => write!(f, "id out of range: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid shift: {0}")]
    InvalidShift(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("matching is not stable for the instance")]
    NotStable,
    #[error("rotation set is not closed: R{member} requires R{missing}")]
    NotClosed { member: usize, missing: usize },
    #[error("invalid rotation poset: {0}")]
    InvalidPoset(String),
    #[error("rotation is not exposed in the matching")]
    NotExposed,
    #[error("shift analysis has status {0}, expected PROPER")]
    NotProper(ShiftStatus),
    #[error("flow is not maximum: an augmenting path from t to s remains")]
    FlowNotMaximum,
    #[error("analyses do not match the distribution: {0}")]
    Mismatch(String),
    #[error("instance too large for brute force: {size} agents per side exceeds the limit of {limit}")]
    SizeGuard { limit: usize, size: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
