//! Generic numerical kernels: an adaptive Runge-Kutta integrator for linear
//! complex systems, bracketed root finding, adaptive quadrature and a cubic
//! solver.

mod cubic;
mod ode;
mod quadrature;
mod roots;

pub use cubic::{cubic_roots, poly_eval};
pub use ode::{
    integrate_linear, integrate_linear_ode, DenseGenerator, LinearOperator, OdeOptions, OutputGrid,
    ScaledRealGenerator, Trajectory,
};
pub use quadrature::{quadrature, Quadrature};
pub use roots::{find_roots_bracketed, RootOptions};

use thiserror::Error;

/// A set of roots together with the residual |f(root)| of each one.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet<T> {
    pub roots: Vec<T>,
    pub residuals: Vec<f64>,
    /// Tolerance the residuals were accepted against.
    pub tolerance: f64,
}

impl<T> RootSet<T> {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: operator is {rows}x{cols}, state has length {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxSteps { max_steps: usize, t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("function returned NaN at x = {x}")]
    NanEncountered { x: f64 },
    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    NotConverged { estimate: f64, error: f64 },
    #[error("leading coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
