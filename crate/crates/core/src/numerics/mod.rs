//! Special functions, fading laws and the direct stationary solver.

mod marcum;
mod rician;
mod stationary;

pub use marcum::{marcum_q1, marcum_q1_pair, DEFAULT_MARCUM_TOL};
pub use rician::{RicianChannel, RicianSampler};
pub use stationary::{solve_stationary_direct, solve_stationary_renewal, stationary_residual};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub marcum_abs_tol: f64,
    /// `e_π`: stop threshold of the coupled iteration and residual bound of
    /// the direct solve.
    pub solver_residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { marcum_abs_tol: DEFAULT_MARCUM_TOL, solver_residual_tol: 1e-10, max_iterations: 10_000 }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.marcum_abs_tol > 0.0) || !(self.solver_residual_tol > 0.0) {
            return Err(Error::Config("tolerances must be strictly positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}
