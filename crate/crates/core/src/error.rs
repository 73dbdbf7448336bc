use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or control had the wrong length.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Node index outside `0..n` (zero-based).
    NodeOutOfRange { node: usize, n: usize },
    SelfLoop { node: usize },
    DuplicateEdge { i: usize, j: usize },
    NonPositiveWeight { i: usize, j: usize, weight: f64 },
    /// A control bit was set on a pair that is not an edge of the topology.
    NonEdgeControl { i: usize, j: usize },
    BudgetExceeded { budget: usize, limit: usize },
    NegativeTime(f64),
    /// A scalar parameter failed validation; the message names it.
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::NodeOutOfRange { node, n } => {
                write!(f, "node {} out of range for {n} nodes", node + 1)
            }
            Error::SelfLoop { node } => write!(f, "self-loop at node {}", node + 1),
            Error::DuplicateEdge { i, j } => write!(f, "duplicate edge ({}, {})", i + 1, j + 1),
            Error::NonPositiveWeight { i, j, weight } => write!(
                f,
                "edge ({}, {}) has non-positive weight {weight}",
                i + 1,
                j + 1
            ),
            Error::NonEdgeControl { i, j } => write!(
                f,
                "control breaks ({}, {}) which is not an edge",
                i + 1,
                j + 1
            ),
            Error::BudgetExceeded { budget, limit } => {
                write!(f, "link budget {budget} exceeds limit {limit}")
            }
            Error::NegativeTime(t) => write!(f, "negative time {t}"),
            Error::InvalidParameter(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}
