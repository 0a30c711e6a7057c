use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A malformed line in textual graph input (1-based line number).
    Parse { line: usize, message: String },
    /// An edge from a node to itself.
    SelfLoop { line: usize, node: usize },
    /// A node id outside `[0, n)`.
    NodeOutOfRange { node: usize, node_count: usize },
    /// An argument violates an operation's precondition.
    InvalidArgument(String),
    /// Vector or matrix dimensions disagree.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A non-finite value appeared where a finite one is required.
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            what,
            expected,
            found,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::SelfLoop { line, node } => {
                write!(f, "line {line}: self-loop on node {node} is not allowed")
            }
            Error::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} out of range for graph with {node_count} nodes")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Shape {
                what,
                expected,
                found,
            } => write!(f, "shape mismatch in {what}: expected {expected}, found {found}"),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
