//! Error type shared by the solver core.

use alloc::string::String;
use core::fmt;

use crate::integrator::StepDiagnostics;

#[derive(Debug, Clone)]
pub enum Error {
    /// Mismatched or malformed arguments: incompatible grids, bad sizes,
    /// stepsizes that do not divide the interval.
    InvalidArgument(String),
    /// A domain object failed validation (noise decay exponent, growth
    /// exponent, non-finite coefficients).
    InvalidParameter(String),
    /// A solver or collocation configuration was rejected (stepsize rule,
    /// quadrature too small for the declared polynomial degree).
    InvalidConfig(String),
    /// The implicit solve missed its residual contract in both the
    /// fixed-point and Newton branches.
    NonConvergence {
        /// Index of the failing step when raised inside a trajectory.
        step: Option<usize>,
        diagnostics: StepDiagnostics,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Attach the trajectory step index to a solver failure.
    pub(crate) fn at_step(self, m: usize) -> Self {
        match self {
            Error::NonConvergence { diagnostics, .. } => Error::NonConvergence {
                step: Some(m),
                diagnostics,
            },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonConvergence { step, diagnostics } => {
                match step {
                    Some(m) => write!(f, "implicit solve did not converge at step {m}")?,
                    None => write!(f, "implicit solve did not converge")?,
                }
                write!(
                    f,
                    " ({} iterations, residual {:.3e}, branch {:?})",
                    diagnostics.iterations, diagnostics.final_residual, diagnostics.branch
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
