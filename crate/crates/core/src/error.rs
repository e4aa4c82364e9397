use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
pub struct QuadratureError {
    pub achieved: f64,
    pub requested: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsothermError {
    #[error("concentration {c} outside validity interval [0, {c_max}]{}", pole_note(*.pole))]
    OutOfDomain { c: f64, c_max: f64, pole: Option<f64> },
    #[error("invalid isotherm parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn pole_note(pole: Option<f64>) -> String {
    match pole {
        Some(p) => format!(" (isotherm pole at c = {p})"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("hyperbolicity lost at column {n}, cell {i}: u = {u:e}")]
    HyperbolicityLoss { n: usize, i: usize, u: f64 },
    #[error("CFL violated at column {n}, cell {i}: convex-combination weight {weight:e}")]
    CflViolated { n: usize, i: usize, weight: f64 },
    #[error("non-finite value at column {n}, cell {i}")]
    NonFinite { n: usize, i: usize },
    #[error("temporal extension exhausted at column {n}: tail no longer uniform")]
    ExtensionExhausted { n: usize },
    #[error(transparent)]
    Isotherm(#[from] IsothermError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiemannError {
    #[error("invalid Riemann problem: {0}")]
    InvalidProblem(String),
    #[error("shock denominator [I] - c[h] = {0:e} is not positive; isotherm is not admissible")]
    NonAdmissibleIsotherm(f64),
    #[error("internal wave-fan error: {0}")]
    Internal(String),
    #[error(transparent)]
    Isotherm(#[from] IsothermError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Riemann(#[from] RiemannError),
    #[error(transparent)]
    Isotherm(#[from] IsothermError),
}

impl HarnessError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        HarnessError::Config { line, message: message.into() }
    }

    /// Process exit code: 1 for configuration and I/O problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Io { .. } => 1,
            HarnessError::Scheme(SchemeError::InvalidConfig(_)) => 1,
            HarnessError::Riemann(RiemannError::InvalidProblem(_)) => 1,
            HarnessError::Isotherm(IsothermError::InvalidParameter { .. }) => 1,
            _ => 2,
        }
    }
}
