use thiserror::Error;

/// Errors raised by the certification and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular problem: {0}")]
    Singular(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("stale coupling solution: residual {residual:e} exceeds tolerance {tolerance:e}")]
    StaleSolution { residual: f64, tolerance: f64 },

    #[error("simulation diverged at t = {t} (step {step}): norm {norm:e}")]
    Divergence { t: f64, step: usize, norm: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),
}

pub type Result<T> = std::result::Result<T, CertError>;
