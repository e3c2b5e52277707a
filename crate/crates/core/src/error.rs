use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("assignment has {got} entries but {expected} variables are expected")]
    AssignmentLength { expected: usize, got: usize },

    #[error("assignment entry {index} is {value}; entries must be -1 or +1")]
    AssignmentValue { index: usize, value: i8 },

    #[error("variable {var} is out of range for a model over {num_vars} variables")]
    VariableOutOfRange { var: usize, num_vars: usize },

    #[error("variable {var} is not in the circuit scope")]
    VariableNotInScope { var: usize },

    #[error("{what} refused: {size} exceeds the cap of {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("logical constraint unsupported: potential #{index} is {value}")]
    NonPositivePotential { index: usize, value: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("polynomial is not a grid Ising model: {0}")]
    NotAGrid(String),

    #[error("all {0} restarts produced a non-finite ELBO or gradient")]
    AllRestartsFailed(usize),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A malformed text input. `position` is a token index for the UAI reader and
/// a 1-based line number for the line-oriented formats.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at {unit} {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub unit: PositionUnit,
}

impl ParseError {
    pub fn at_token(kind: ParseErrorKind, position: usize) -> Self {
        Self {
            kind,
            position,
            unit: PositionUnit::Token,
        }
    }

    pub fn at_line(kind: ParseErrorKind, position: usize) -> Self {
        Self {
            kind,
            position,
            unit: PositionUnit::Line,
        }
    }

    /// Stable numeric code for scripted consumers.
    pub fn code(&self) -> u32 {
        self.kind.code()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionUnit {
    Token,
    Line,
}

impl fmt::Display for PositionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositionUnit::Token => f.write_str("token"),
            PositionUnit::Line => f.write_str("line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected network type MARKOV, found {0:?}")]
    BadHeader(String),
    #[error("unexpected end of input while reading {0}")]
    UnexpectedEof(&'static str),
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("variable cardinality {0} is unsupported (only binary variables)")]
    UnsupportedCardinality(usize),
    #[error("table has {got} entries, scope requires {expected}")]
    TableSizeMismatch { expected: usize, got: usize },
    #[error("non-positive potential {0}")]
    NonPositiveEntry(f64),
    #[error("trailing token {0:?}")]
    TrailingTokens(String),
    #[error("variable {var} out of range for {num_vars} variables")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("variable {0} repeated in a factor scope")]
    DuplicateScopeVariable(usize),
    #[error("factor scope of {0} variables exceeds the dense-table limit")]
    ScopeTooLarge(usize),
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("node count mismatch: header says {expected}, found {got}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("invalid node: {0}")]
    InvalidNode(String),
}

impl ParseErrorKind {
    pub fn code(&self) -> u32 {
        match self {
            ParseErrorKind::BadHeader(_) => 1,
            ParseErrorKind::UnexpectedEof(_) => 2,
            ParseErrorKind::InvalidNumber(_) => 3,
            ParseErrorKind::UnsupportedCardinality(_) => 4,
            ParseErrorKind::TableSizeMismatch { .. } => 5,
            ParseErrorKind::NonPositiveEntry(_) => 6,
            ParseErrorKind::TrailingTokens(_) => 7,
            ParseErrorKind::VariableOutOfRange { .. } => 8,
            ParseErrorKind::DuplicateScopeVariable(_) => 9,
            ParseErrorKind::ScopeTooLarge(_) => 10,
            ParseErrorKind::MalformedLine(_) => 11,
            ParseErrorKind::NodeCountMismatch { .. } => 12,
            ParseErrorKind::InvalidNode(_) => 13,
        }
    }
}
