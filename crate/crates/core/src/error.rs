use thiserror::Error;

/// Errors raised by the population models and their numerical machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("t = {t} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("capacity is not differentiable at breakpoint t = {t}")]
    NonDifferentiable { t: f64 },

    #[error("logistic solution has a pole between t0 and t = {t} (denominator {denominator:e})")]
    Pole { t: f64, denominator: f64 },

    #[error("exponent {exponent:e} exceeds the overflow bound {bound}; rescale r or the time axis")]
    Range { exponent: f64, bound: f64 },

    #[error("schedule has no declared period")]
    NotPeriodic,

    #[error("no positive periodic solution: mean capacity over one period is {mean_capacity} (must be > 0)")]
    NoPeriodicSolution { mean_capacity: f64 },

    #[error("step size {step:e} fell below min_step at t = {t} (stiff or blowing-up solution)")]
    Stiffness { t: f64, step: f64 },

    #[error("solution became non-finite at t = {t}")]
    Divergence { t: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: bad flags, unparsable schedules, unreadable files.
    Usage,
    /// A well-formed request that has no mathematical answer.
    Domain,
    /// The numerics failed to deliver a result within the configured budget.
    Numerical,
}

impl Error {
    /// Short, stable name of the variant (printed on the diagnostic stream).
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NonDifferentiable { .. } => "NonDifferentiable",
            Error::Pole { .. } => "Pole",
            Error::Range { .. } => "Range",
            Error::NotPeriodic => "NotPeriodic",
            Error::NoPeriodicSolution { .. } => "NoPeriodicSolution",
            Error::Stiffness { .. } => "Stiffness",
            Error::Divergence { .. } => "Divergence",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } | Error::Parse(_) | Error::Io(_) => ErrorClass::Usage,
            Error::OutOfRange { .. }
            | Error::NonDifferentiable { .. }
            | Error::Pole { .. }
            | Error::NotPeriodic
            | Error::NoPeriodicSolution { .. } => ErrorClass::Domain,
            Error::Range { .. }
            | Error::Stiffness { .. }
            | Error::Divergence { .. }
            | Error::NonConvergence { .. } => ErrorClass::Numerical,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
