use thiserror::Error;

/// Failure modes shared by every pricer, the quadrature engine and the
/// Monte Carlo oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParameters(Vec<String>),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("outside validity domain: {0}")]
    ValidityDomain(String),

    #[error("moment generating function is not real: relative imaginary part {0:e}")]
    NonRealMgf(f64),

    #[error("time arguments out of order: {earlier} must not exceed {later}")]
    OrderViolation { earlier: f64, later: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimate {estimate:e} after order {order}")]
    NoConvergence { order: usize, estimate: f64 },

    #[error("kernel returned a non-finite value in {0}")]
    KernelFailure(&'static str),

    #[error("rate structure violated: relative mismatch {0:e}")]
    StructureViolation(f64),

    #[error("critical correlation is indeterminate: {0}")]
    IndeterminateRho0(&'static str),

    #[error("Monte Carlo budget exceeded: {requested} steps > {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

impl PricingError {
    /// True for errors caused by inputs rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PricingError::InvalidParameters(_)
                | PricingError::ValidityDomain(_)
                | PricingError::OrderViolation { .. }
                | PricingError::BudgetExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;
