use thiserror::Error;

/// Errors raised by the model, numerics and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// A fixed-point or root search ran out of iterations.
    #[error("fixed point did not converge after {iterations} iterations: x = {estimate}, residual {residual:e}")]
    Convergence {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    /// An internal simulator invariant was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
