use thiserror::Error;

/// Errors raised by operators, solvers, integrators and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e}){context}")]
    Convergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("trajectory diverged at step {step} (t = {time:.6e}, |x| = {norm:.3e})")]
    Divergence { step: usize, time: f64, norm: f64 },

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn convergence(iterations: usize, residual: f64) -> Self {
        Error::Convergence {
            iterations,
            residual,
            context: String::new(),
        }
    }

    /// Attaches extra context (e.g. the path time) to a convergence failure.
    pub(crate) fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Convergence {
                iterations,
                residual,
                context,
            } => Error::Convergence {
                iterations,
                residual,
                context: format!("{context}; {}", ctx.into()),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
