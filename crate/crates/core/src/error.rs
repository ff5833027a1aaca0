use thiserror::Error;

/// Broad failure classes, used by the command-line front-end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    InvalidIndex { index: usize, n_qubits: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("singular detuning in `{shift}`: denominator vanishes")]
    SingularDetuning { shift: &'static str },

    #[error("validation failed for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("unsupported variant {0} for a rotating-frame drive")]
    UnsupportedVariant(String),

    #[error("steady state is not unique (gap estimate {gap:.3e})")]
    NonUniqueSteadyState { gap: f64 },

    #[error("integration step size underflow at t = {t:.6e} (dt = {dt:.3e})")]
    Stiffness { t: f64, dt: f64 },

    #[error("collapse indicator is constant over [{lo}, {hi}]")]
    Interval { lo: f64, hi: f64 },

    #[error("divergent Josephson inductance: cos(pi Phi_DC/Phi_0) * cos(phi_DC) = {0:.3e}")]
    DivergentInductance(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonUniqueSteadyState { .. }
            | Error::Stiffness { .. }
            | Error::Interval { .. }
            | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
