use thiserror::Error;

/// Every fallible operation in the crate funnels through this type.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A characteristic polynomial (or similar) has no linear factor over Q(i),
    /// so the requested exact decomposition does not exist in this field.
    #[error("irreducible factor of degree {degree} over Q(i): {context}")]
    IrreducibleFactor { degree: usize, context: String },

    /// Malformed textual input (kets, scalar literals, matrix files, JSON).
    #[error("parse error: {0}")]
    Parse(String),

    /// A ket index lies outside the declared shape.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// The declared shape has no axis of dimension 2 to serve as the qubit.
    #[error("no qubit axis: {0}")]
    NoQubitAxis(String),

    /// Operand dimensions do not match the operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Two states that must share a shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The zero pencil (both slices zero) has no canonical form.
    #[error("zero pencil")]
    ZeroPencil,

    /// A state with no nonzero amplitude.
    #[error("zero state")]
    ZeroState,

    /// The residual-orbit construction is undefined at lambda in {0, 1}.
    #[error("degenerate lambda: {0}")]
    DegenerateLambda(String),

    /// The census table lacks a required entry.
    #[error("missing omega entry: {0}")]
    MissingOmega(String),

    /// An internal invariant failed. Reaching this is a bug, never user error.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI. Stable across releases.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::IndexOutOfRange(_) | Error::NoQubitAxis(_) => 2,
            Error::IrreducibleFactor { .. } => 5,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }
}
