use thiserror::Error;

/// Errors raised by the numerical routines and the input parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NotSquare: period matrix must be square ({rows}x{cols} given)")]
    NotSquare { rows: usize, cols: usize },

    #[error("DimensionMismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("NotSymmetric: relative asymmetry {asymmetry:e} exceeds 1e-12")]
    NotSymmetric { asymmetry: f64 },

    #[error("NotPositiveDefinite: imaginary part has eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("NotHalfInteger: characteristic is not half-integer")]
    NotHalfInteger,

    #[error("NotOdd: characteristic is not odd")]
    NotOdd,

    #[error("EpsilonTooSmall: truncation radius {radius} exceeds cap {cap}")]
    EpsilonTooSmall { radius: f64, cap: usize },

    #[error("DenominatorUnderflow: normalizing sum {value:e} is below 1e-300")]
    DenominatorUnderflow { value: f64 },

    #[error("NotOnThetaDivisor: |theta(zeta)| / scale = {residual:e}")]
    NotOnThetaDivisor { residual: f64 },

    #[error("NotSupported: {0}")]
    NotSupported(String),

    #[error("OnDiagonal: z1 - z2 lies within 1e-6 of the period lattice")]
    OnDiagonal,

    #[error("PoleOnPath: integration path passes within 1e-3 of a pole")]
    PoleOnPath,

    #[error("NoConvergence: stopped at ({x}, {y}) with res {res:e} after {iters} iterations")]
    NoConvergence { x: f64, y: f64, res: f64, iters: usize },

    #[error("SingularJacobian: condition number {condition:e} exceeds 1e12")]
    SingularJacobian { condition: f64 },

    #[error("InvalidInput: {0}")]
    InvalidInput(String),

    #[error("Parse: {0}")]
    Parse(String),
}

impl Error {
    /// Short variant name, used by the CLI for exit messages.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotHalfInteger => "NotHalfInteger",
            Error::NotOdd => "NotOdd",
            Error::EpsilonTooSmall { .. } => "EpsilonTooSmall",
            Error::DenominatorUnderflow { .. } => "DenominatorUnderflow",
            Error::NotOnThetaDivisor { .. } => "NotOnThetaDivisor",
            Error::NotSupported(_) => "NotSupported",
            Error::OnDiagonal => "OnDiagonal",
            Error::PoleOnPath => "PoleOnPath",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::SingularJacobian { .. } => "SingularJacobian",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
