use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HsrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("invalid step size {dt}: {reason}")]
    InvalidStep { dt: f64, reason: String },

    #[error("initial state outside the box [0, m] at node {node}")]
    OutsideBox { node: usize },

    #[error("{n} nodes exceed the enumeration limit of {limit}; use the iterative equilibrium solver")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("no piece of the map covers the input (feasible values: {feasible})")]
    NoCoveringPiece { feasible: usize },

    #[error("contraction condition not certified (rho = {rho})")]
    NotCertified { rho: f64 },

    #[error("uniqueness of the composite equilibrium not certified (rho = {rho})")]
    UniquenessNotCertified { rho: f64 },

    #[error("certificate failed; refusing to check the decay envelope")]
    CertificateFailed,

    #[error("exact solution infeasible: residual {residual:e}")]
    InfeasibleExact { residual: f64 },

    #[error("inhibition inequalities infeasible: {0}")]
    InfeasibleInequality(String),

    #[error("required feedforward entry {index} is negative ({value})")]
    NegativeControl { index: usize, value: f64 },

    #[error("no positive correlations in the requested lag range")]
    NonPositiveCorrelations,

    #[error("simulation diverged: {0}")]
    SimulationDiverged(String),

    #[error("all {0} starts failed")]
    AllStartsFailed(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl HsrError {
    /// True for errors caused by malformed or inconsistent input, as opposed
    /// to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HsrError::DimensionMismatch(_)
                | HsrError::InvalidNetwork(_)
                | HsrError::InvalidHierarchy(_)
                | HsrError::InvalidStep { .. }
                | HsrError::OutsideBox { .. }
                | HsrError::EnumerationLimit { .. }
                | HsrError::InvalidInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HsrError>;
