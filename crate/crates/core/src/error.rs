use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdpError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two objects that must agree in dimension or horizon do not.
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A path, triplet or field failed its construction invariants.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    /// An iterative solver ran out of iterations.
    #[error("{solver} did not converge after {iterations} iterations")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        last_iterate: Vec<f64>,
    },
    /// Path-space optimization found no iterate satisfying the event.
    #[error("no feasible control found: best violation {best_violation:e} after {starts} starts")]
    Infeasible {
        best_violation: f64,
        starts: usize,
        trace: Vec<crate::ratefn::TraceRecord>,
    },
}

pub type Result<T> = core::result::Result<T, LdpError>;

pub(crate) fn domain(msg: impl Into<String>) -> LdpError {
    LdpError::Domain(msg.into())
}

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> LdpError {
    LdpError::Invalid {
        what,
        reason: reason.into(),
    }
}
