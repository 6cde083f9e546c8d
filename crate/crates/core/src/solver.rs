//! Coupled stationary solve by fixed-point iteration.
//!
//! Stacking every IoD's distribution into `π`, the coupled steady state is a
//! fixed point of `F(π) = Zᵀ(π) π`, where `Z(π)` is block diagonal and each
//! block depends on the other IoDs through the selection probabilities. The
//! default iteration refreshes the profiles and applies one chain step per
//! sweep; the accelerated variant replaces the chain step with an exact
//! stationary solve of each block, which converges in far fewer sweeps when
//! the chains mix slowly.

use serde::{Deserialize, Serialize};

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::fairness::{FairnessModel, JointState};
use crate::numerics::{solve_stationary_renewal, ToleranceConfig};
use crate::policy::PolicyKind;
use crate::scalar::{l1_distance, Scalar};
use crate::system::SystemConfig;
use crate::throughput::{SelectionProfile, ThroughputModel};

/// Analytical model of one of the two analyzable policies.
#[derive(Debug, Clone)]
pub enum ChainModel<S = f64> {
    Throughput(ThroughputModel<S>),
    Fairness(FairnessModel<S>),
}

impl<S: Scalar> ChainModel<S> {
    pub fn new(cfg: &SystemConfig<S>, policy: PolicyKind) -> Result<Self> {
        match policy {
            PolicyKind::ThroughputOriented => Ok(Self::Throughput(ThroughputModel::new(cfg)?)),
            PolicyKind::FairnessOriented => Ok(Self::Fairness(FairnessModel::new(cfg)?)),
            other => Err(Error::NotAnalyzable(other.to_string())),
        }
    }

    pub fn policy(&self) -> PolicyKind {
        match self {
            Self::Throughput(_) => PolicyKind::ThroughputOriented,
            Self::Fairness(_) => PolicyKind::FairnessOriented,
        }
    }

    pub fn num_iods(&self) -> usize {
        match self {
            Self::Throughput(m) => m.num_iods(),
            Self::Fairness(m) => m.num_iods(),
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Self::Throughput(m) => m.num_states(),
            Self::Fairness(m) => m.num_states(),
        }
    }

    /// Battery level of a chain state.
    pub fn level_of(&self, state: usize) -> usize {
        match self {
            Self::Throughput(_) => state,
            Self::Fairness(m) => state / m.max_wait(),
        }
    }

    pub fn profile(&self, pis: &[Vec<S>]) -> Result<SelectionProfile<S>> {
        match self {
            Self::Throughput(m) => m.profile(pis),
            Self::Fairness(m) => m.profile(pis),
        }
    }

    pub fn step(&self, i: usize, upsilon: &[S], pi: &[S]) -> Vec<S> {
        match self {
            Self::Throughput(m) => m.step(i, upsilon, pi),
            Self::Fairness(m) => m.step(i, upsilon, pi),
        }
    }

    pub fn matrix(&self, i: usize, upsilon: &[S]) -> Result<TransitionMatrix<S>> {
        match self {
            Self::Throughput(m) => m.matrix(i, upsilon),
            Self::Fairness(m) => m.matrix(i, upsilon),
        }
    }

    /// States ordered so that every move other than a reset to the empty
    /// state goes forward: levels for the throughput chain, and waits then
    /// levels for the fairness chain.
    pub fn renewal_order(&self) -> Vec<usize> {
        match self {
            Self::Throughput(m) => (0..m.num_states()).collect(),
            Self::Fairness(m) => {
                let (mw, levels) = (m.max_wait(), m.num_states() / m.max_wait());
                (1..=mw).flat_map(|w| (0..levels).map(move |k| JointState::new(k, w).index(mw))).collect()
            }
        }
    }

    /// `F(π)`: one refresh of the profiles followed by one chain step.
    pub fn fixed_point_map(&self, pis: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
        let prof = self.profile(pis)?;
        Ok((0..self.num_iods()).map(|i| self.step(i, prof.row(i), &pis[i])).collect())
    }

    pub fn uniform(&self) -> Vec<Vec<S>> {
        let n = self.num_states();
        vec![vec![S::one() / S::from_usize_lossy(n); n]; self.num_iods()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: ToleranceConfig,
    /// Solve each block exactly after every profile refresh.
    pub accelerated: bool,
    /// Keep the `(iteration, residual)` history.
    pub record_trace: bool,
    /// Weight `ω ∈ (0, 1]` of the new iterate, `π ← (1−ω)π + ωF(π)`. The
    /// fixed points do not depend on it; `ω < 1` damps the oscillation of
    /// nearly periodic chains.
    pub relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: ToleranceConfig::default(), accelerated: false, record_trace: false, relaxation: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSolution<S = f64> {
    pub policy: PolicyKind,
    /// One stationary distribution per IoD, over that policy's chain states.
    pub distributions: Vec<Vec<S>>,
    pub iterations_used: usize,
    /// `‖π⁽ˢ⁾ − π⁽ˢ⁻¹⁾‖₁` at the last iteration.
    pub final_residual: f64,
    pub converged: bool,
    /// Largest `|Σπᵢ − 1|` corrected by renormalization along the way.
    pub max_mass_drift: f64,
    pub trace: Vec<(usize, f64)>,
}

impl<S: Scalar> CoupledSolution<S> {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged { iterations: self.iterations_used, residual: self.final_residual })
        }
    }

    /// Trace as CSV with header `iteration,residual`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for (it, r) in &self.trace {
            out.push_str(&format!("{it},{r:e}\n"));
        }
        out
    }
}

pub fn solve_coupled<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    tol: &ToleranceConfig,
    init: Option<&[Vec<S>]>,
) -> Result<CoupledSolution<S>> {
    let opts = SolverOptions { tol: *tol, ..SolverOptions::default() };
    solve_coupled_with(&ChainModel::new(cfg, policy)?, &opts, init)
}

pub fn solve_coupled_with<S: Scalar>(
    model: &ChainModel<S>,
    opts: &SolverOptions,
    init: Option<&[Vec<S>]>,
) -> Result<CoupledSolution<S>> {
    opts.tol.validate()?;
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::Config(format!("relaxation must lie in (0, 1], got {}", opts.relaxation)));
    }
    let omega = S::lit(opts.relaxation);
    let mut pis = match init {
        Some(p) => {
            validate_distributions(p, model.num_iods(), model.num_states())?;
            p.to_vec()
        }
        None => model.uniform(),
    };

    let mut trace = Vec::new();
    let mut drift = 0.0_f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.tol.max_iterations {
        iterations += 1;
        let next = if opts.accelerated {
            let prof = model.profile(&pis)?;
            let order = model.renewal_order();
            (0..model.num_iods())
                .map(|i| solve_stationary_renewal(&model.matrix(i, prof.row(i))?, &order))
                .collect::<Result<Vec<_>>>()?
        } else {
            model.fixed_point_map(&pis)?
        };
        let mut next = next;
        for (i, pi) in next.iter_mut().enumerate() {
            drift = drift.max(renormalize(pi, i, iterations)?);
        }
        residual = pis.iter().zip(&next).map(|(a, b)| l1_distance(a, b).to_f64_lossy()).sum();
        if opts.relaxation < 1.0 {
            for (old, new) in pis.iter().zip(next.iter_mut()) {
                for (o, n) in old.iter().zip(new.iter_mut()) {
                    *n = *o + omega * (*n - *o);
                }
            }
        }
        pis = next;
        if opts.record_trace {
            trace.push((iterations, residual));
        }
        if residual <= opts.tol.solver_residual_tol {
            break;
        }
    }
    let converged = residual <= opts.tol.solver_residual_tol;
    if !converged {
        log::warn!("{} solve stopped after {iterations} iterations, residual {residual:e}", model.policy());
    }
    Ok(CoupledSolution {
        policy: model.policy(),
        distributions: pis,
        iterations_used: iterations,
        final_residual: residual,
        converged,
        max_mass_drift: drift,
        trace,
    })
}

/// Rescales to unit mass and returns the correction applied.
fn renormalize<S: Scalar>(pi: &mut [S], iod: usize, iteration: usize) -> Result<f64> {
    let mut total = S::zero();
    for &v in pi.iter() {
        if !v.is_finite() || v < S::zero() {
            return Err(Error::Numeric(format!("IoD {iod} has invalid mass {v} at iteration {iteration}")));
        }
        total = total + v;
    }
    if !(total > S::zero()) {
        return Err(Error::Numeric(format!("IoD {iod} lost all mass at iteration {iteration}")));
    }
    for v in pi.iter_mut() {
        *v = *v / total;
    }
    Ok((total - S::one()).abs().to_f64_lossy())
}

pub(crate) fn validate_distributions<S: Scalar>(pis: &[Vec<S>], num_iods: usize, num_states: usize) -> Result<()> {
    crate::throughput::check_shapes(pis, num_iods, num_states)?;
    for (i, pi) in pis.iter().enumerate() {
        if pi.iter().any(|&v| !v.is_finite() || v < S::zero()) {
            return Err(Error::Domain(format!("distribution {i} has negative or non-finite mass")));
        }
        let total: S = pi.iter().copied().sum();
        if (total - S::one()).abs() > S::lit(1e-9) {
            return Err(Error::Domain(format!("distribution {i} sums to {total}")));
        }
    }
    Ok(())
}

/// Empirical Lipschitz ratio `‖F(π_a) − F(π_b)‖₁ / ‖π_a − π_b‖₁` of the
/// coupled map, a convergence diagnostic.
pub fn contraction_estimate<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    pi_a: &[Vec<S>],
    pi_b: &[Vec<S>],
) -> Result<S> {
    contraction_estimate_with(&ChainModel::new(cfg, policy)?, pi_a, pi_b)
}

pub fn contraction_estimate_with<S: Scalar>(model: &ChainModel<S>, pi_a: &[Vec<S>], pi_b: &[Vec<S>]) -> Result<S> {
    validate_distributions(pi_a, model.num_iods(), model.num_states())?;
    validate_distributions(pi_b, model.num_iods(), model.num_states())?;
    let denom: S = pi_a.iter().zip(pi_b).map(|(a, b)| l1_distance(a, b)).sum();
    if denom == S::zero() {
        return Err(Error::Domain("contraction estimate needs two distinct points".into()));
    }
    let fa = model.fixed_point_map(pi_a)?;
    let fb = model.fixed_point_map(pi_b)?;
    let num: S = fa.iter().zip(&fb).map(|(a, b)| l1_distance(a, b)).sum();
    Ok(num / denom)
}
