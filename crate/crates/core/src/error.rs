use std::fmt;

/// Errors shared across the library.
///
/// Every documented failure mode maps to one variant so callers (and the CLI)
/// can report a machine-readable certificate instead of a bare panic.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands live on different scalar backends (exact vs. approximate).
    BackendMismatch,
    /// Operands disagree on the number of variables.
    VarMismatch { expected: usize, got: usize },
    /// A jet or map whose linear part must be invertible has a singular one.
    SingularLinearPart,
    /// An operation required a map fixing 0 with identity derivative there.
    NotSchwarz(String),
    /// The Jacobian determinant is not a nonzero constant; carries its display form.
    NonConstantJacobian(String),
    /// Planar factorization certified the input as not an automorphism.
    NotAnAutomorphism(String),
    /// A divergence-free input was required; carries the offending divergence.
    NonzeroDivergence(String),
    /// The contraction with the symplectic form is not closed.
    NotHamiltonian(String),
    /// The requested value is transcendental and cannot live on the exact backend.
    ExactTranscendental(String),
    /// A word or map fails the certificate of the requested group tag.
    TagViolation(String),
    /// Interpolation nodes must be pairwise distinct.
    RepeatedNode,
    /// A nonvanishing interpolant was asked to match the value zero.
    ZeroValue,
    /// A parameterized target must equal the identity at every node.
    NodeNotIdentity(String),
    /// A supported but unimplemented regime (documented as out of scope).
    Unsupported(String),
    /// Internal linear solve could not reach full rank; should not occur.
    RankFailure(String),
    /// Malformed input data.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BackendMismatch => write!(f, "scalar backend mismatch (exact vs approximate)"),
            Error::VarMismatch { expected, got } => {
                write!(f, "variable count mismatch: expected {expected}, got {got}")
            }
            Error::SingularLinearPart => write!(f, "singular linear part"),
            Error::NotSchwarz(s) => write!(f, "not tangent to the identity at 0: {s}"),
            Error::NonConstantJacobian(s) => write!(f, "Jacobian is not a nonzero constant: {s}"),
            Error::NotAnAutomorphism(s) => write!(f, "not an automorphism: {s}"),
            Error::NonzeroDivergence(s) => write!(f, "nonzero divergence: {s}"),
            Error::NotHamiltonian(s) => write!(f, "not Hamiltonian: {s}"),
            Error::ExactTranscendental(s) => {
                write!(f, "transcendental value on the exact backend: {s}")
            }
            Error::TagViolation(s) => write!(f, "group tag violation: {s}"),
            Error::RepeatedNode => write!(f, "interpolation nodes must be distinct"),
            Error::ZeroValue => write!(f, "nonvanishing interpolant given the value 0"),
            Error::NodeNotIdentity(s) => write!(f, "target is not the identity at a node: {s}"),
            Error::Unsupported(s) => write!(f, "unsupported: {s}"),
            Error::RankFailure(s) => write!(f, "internal rank failure: {s}"),
            Error::Invalid(s) => write!(f, "invalid input: {s}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
