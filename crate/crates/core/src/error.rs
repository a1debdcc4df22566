use alloc::boxed::Box;
use alloc::string::String;

use crate::eigen::Spectrum;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain has no interior node")]
    EmptyDomain,
    #[error("domain has only {0} interior nodes (at least 4 required)")]
    TooFewNodes(usize),
    #[error("domain mask is not connected ({components} components)")]
    DisconnectedDomain { components: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Laguerre index {0} outside the supported range 0..=64")]
    IndexOutOfRange(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("quadrature needs {needed} nodes, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("only {found} admissible trial functions, {requested} requested")]
    NotEnoughTrials { requested: usize, found: usize },
    #[error("operation requires a t-periodic domain")]
    TopologyMismatch,
    #[error("zero vector")]
    ZeroVector,
    #[error("dimension {dim} too small for {requested} eigenpairs")]
    DimensionTooSmall { dim: usize, requested: usize },
    #[error("eigensolver did not converge in {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        partial: Box<Spectrum>,
    },
    #[error("B*diam^2 = {0} exceeds the supported kernel regime (200)")]
    KernelRegime(f64),
}
