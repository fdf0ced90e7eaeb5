use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel order {0}: order must be even and at least 2")]
    InvalidKernelOrder(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter {theta} outside the admissible domain ({lo}, {hi})")]
    ThetaOutOfDomain { theta: f64, lo: f64, hi: f64 },

    #[error("point is not in the open unit cube")]
    InvalidUnitPoint,

    #[error("kernel window is empty")]
    EmptyWindow,

    #[error("fewer than two observations carry positive weight")]
    InsufficientSupport,

    #[error("too few observations kept after trimming: {kept} < {required}")]
    InsufficientData { kept: usize, required: usize },

    #[error("non-finite criterion contribution at row {row}")]
    NonFiniteCriterion { row: usize },

    #[error("hessian estimate is singular (condition number {condition:.3e})")]
    SingularHessian { condition: f64 },

    #[error("analytic derivative requires a differentiable kernel")]
    NonDifferentiableKernel,

    #[error("invalid dataset: {0}")]
    InvalidData(String),
}

impl Error {
    /// Short variant name, used in machine-readable reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidKernelOrder(_) => "InvalidKernelOrder",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ThetaOutOfDomain { .. } => "ThetaOutOfDomain",
            Error::InvalidUnitPoint => "InvalidUnitPoint",
            Error::EmptyWindow => "EmptyWindow",
            Error::InsufficientSupport => "InsufficientSupport",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::NonFiniteCriterion { .. } => "NonFiniteCriterion",
            Error::SingularHessian { .. } => "SingularHessian",
            Error::NonDifferentiableKernel => "NonDifferentiableKernel",
            Error::InvalidData(_) => "InvalidData",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
