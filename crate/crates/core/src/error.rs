use thiserror::Error;

/// Errors raised by the urn workbench.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UrnError {
    /// A numeric argument is outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The caller broke a precondition of the operation.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// The exact enumeration would exceed its state-space guard.
    #[error("state space guard exceeded: {0}")]
    StateSpace(String),
    /// A numerical check failed (e.g. a residue that should cancel did not).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, UrnError>;

pub(crate) fn invalid(msg: impl Into<String>) -> UrnError {
    UrnError::InvalidParameter(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> UrnError {
    UrnError::ContractViolation(msg.into())
}
