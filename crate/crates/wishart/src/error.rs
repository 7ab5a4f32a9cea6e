use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A size cap was exceeded (enumeration, Wick contraction, recursion depth).
    #[error("size cap exceeded: {what} = {got} > {limit}")]
    Cap { what: &'static str, got: usize, limit: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("partition is crossing; {0} is only defined for non-crossing partitions")]
    Crossing(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    /// A stated hypothesis of a bound or formula does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        Err(Error::Cap { what, got, limit })
    } else {
        Ok(())
    }
}
