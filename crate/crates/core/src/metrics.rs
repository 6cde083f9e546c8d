//! Outage, throughput, access and fairness figures from a coupled solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::JointState;
use crate::numerics::ToleranceConfig;
use crate::policy::PolicyKind;
use crate::scalar::Scalar;
use crate::solver::{solve_coupled_with, ChainModel, CoupledSolution, SolverOptions};
use crate::system::SystemConfig;
use crate::throughput::SelectionProfile;

/// `P_out = P_0 + Σ_i P_{i,out}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageBreakdown<S = f64> {
    /// Every IoD empty: nobody can transmit.
    pub idle: S,
    /// IoD scheduled but its SINR falls short.
    pub per_iod: Vec<S>,
    pub total: S,
}

impl<S: Scalar> OutageBreakdown<S> {
    fn assemble(idle: S, per_iod: Vec<S>) -> Self {
        let total = idle + per_iod.iter().copied().sum::<S>();
        Self { idle, per_iod, total }
    }
}

/// Outage probability of IoD `i` transmitting the full level `k`.
fn link_outage<S: Scalar>(cfg: &SystemConfig<S>, i: usize, k: usize) -> Result<S> {
    cfg.channel(i)?.cdf(cfg.outage_gain_threshold(k))
}

fn check_solution<S: Scalar>(
    cfg: &SystemConfig<S>,
    sol: &CoupledSolution<S>,
    profile: &SelectionProfile<S>,
    policy: PolicyKind,
    states: usize,
) -> Result<()> {
    sol.ensure_converged()?;
    if sol.policy != policy {
        return Err(Error::Domain(format!("solution belongs to {} policy, expected {policy}", sol.policy)));
    }
    let l = cfg.num_iods();
    if sol.distributions.len() != l || profile.num_iods() != l {
        return Err(Error::Domain(format!("solution/profile do not cover {l} IoDs")));
    }
    if sol.distributions.iter().chain(&profile.probs).any(|v| v.len() != states) {
        return Err(Error::Domain(format!("expected {states} states per IoD")));
    }
    Ok(())
}

pub fn outage_throughput_oriented<S: Scalar>(
    cfg: &SystemConfig<S>,
    sol: &CoupledSolution<S>,
    profile: &SelectionProfile<S>,
) -> Result<OutageBreakdown<S>> {
    let kk = cfg.num_levels;
    check_solution(cfg, sol, profile, PolicyKind::ThroughputOriented, kk + 1)?;
    let idle = sol.distributions.iter().map(|pi| pi[0]).fold(S::one(), |a, b| a * b);
    let per_iod = (0..cfg.num_iods())
        .map(|i| {
            (1..=kk)
                .map(|k| Ok(sol.distributions[i][k] * profile.probs[i][k] * link_outage(cfg, i, k)?))
                .sum::<Result<S>>()
        })
        .collect::<Result<_>>()?;
    Ok(OutageBreakdown::assemble(idle, per_iod))
}

pub fn outage_fairness_oriented<S: Scalar>(
    cfg: &SystemConfig<S>,
    sol: &CoupledSolution<S>,
    profile: &SelectionProfile<S>,
) -> Result<OutageBreakdown<S>> {
    let (kk, mm) = (cfg.num_levels, cfg.max_wait);
    check_solution(cfg, sol, profile, PolicyKind::FairnessOriented, (kk + 1) * mm)?;
    let idle = sol
        .distributions
        .iter()
        .map(|pi| (1..=mm).map(|m| pi[JointState::new(0, m).index(mm)]).sum::<S>())
        .fold(S::one(), |a, b| a * b);
    let per_iod = (0..cfg.num_iods())
        .map(|i| {
            (1..=kk)
                .map(|k| {
                    let sched: S = (1..=mm)
                        .map(|m| {
                            let idx = JointState::new(k, m).index(mm);
                            sol.distributions[i][idx] * profile.probs[i][idx]
                        })
                        .sum();
                    Ok(sched * link_outage(cfg, i, k)?)
                })
                .sum::<Result<S>>()
        })
        .collect::<Result<_>>()?;
    Ok(OutageBreakdown::assemble(idle, per_iod))
}

/// `Ω = R(1 − P_out)T`.
pub fn throughput<S: Scalar>(rate: S, outage: S, block_duration: S) -> S {
    rate * (S::one() - outage) * block_duration
}

/// Long-run share of blocks in which each IoD transmits. The round-robin and
/// random-selection entries are their nominal slot shares `1/L`.
pub fn access_probabilities<S: Scalar>(
    policy: PolicyKind,
    sol: Option<&CoupledSolution<S>>,
    profile: Option<&SelectionProfile<S>>,
    num_iods: usize,
) -> Result<Vec<S>> {
    match policy {
        PolicyKind::RoundRobin | PolicyKind::RandomSelection => {
            Ok(vec![S::one() / S::from_usize_lossy(num_iods); num_iods])
        }
        _ => {
            let (sol, profile) = sol
                .zip(profile)
                .ok_or_else(|| Error::Domain(format!("{policy} access probabilities need a solution and profile")))?;
            sol.ensure_converged()?;
            Ok(sol
                .distributions
                .iter()
                .zip(&profile.probs)
                .map(|(pi, ups)| pi.iter().zip(ups).map(|(&p, &u)| p * u).sum())
                .collect())
        }
    }
}

fn entropy_fairness<S: Scalar>(shares: &[S]) -> S {
    let l = shares.len();
    if l <= 1 {
        return S::one();
    }
    let h: S = shares.iter().filter(|&&p| p > S::zero()).map(|&p| -p * p.ln()).sum();
    h / S::from_usize_lossy(l).ln()
}

/// Entropy fairness `−Σ ρ̂ log ρ̂ / log L` on the normalized shares
/// `ρ̂ = ρ/Σρ`. All-zero access gives 0.
pub fn fairness_index<S: Scalar>(rho: &[S]) -> S {
    let total: S = rho.iter().copied().sum();
    if !(total > S::zero()) {
        log::warn!("fairness index of an all-zero access vector is reported as 0");
        return S::zero();
    }
    let positive: Vec<S> = rho.iter().copied().filter(|&r| r > S::zero()).collect();
    if positive.iter().all(|&r| r == positive[0]) {
        if rho.len() <= 1 {
            return S::one();
        }
        return S::from_usize_lossy(positive.len()).ln() / S::from_usize_lossy(rho.len()).ln();
    }
    let shares: Vec<S> = rho.iter().map(|&r| r / total).collect();
    entropy_fairness(&shares).min(S::one())
}

/// The same expression applied to the raw access probabilities.
pub fn fairness_index_raw<S: Scalar>(rho: &[S]) -> S {
    entropy_fairness(rho)
}

/// `(1 − υ)/υ`; infinite when the IoD is never scheduled.
pub fn charging_rounds<S: Scalar>(upsilon: S) -> S {
    if upsilon <= S::zero() {
        S::infinity()
    } else {
        (S::one() - upsilon) / upsilon
    }
}

/// Closed-form evaluation of one policy at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport<S = f64> {
    pub policy: PolicyKind,
    pub outage_total: S,
    pub outage_idle: S,
    pub outage_per_iod: Vec<S>,
    pub throughput: S,
    pub access_probs: Vec<S>,
    /// Fairness on normalized shares.
    pub fairness: S,
    /// Fairness on the raw access probabilities.
    pub fairness_raw: S,
    pub charging_rounds: Vec<S>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl<S: Scalar> AnalysisReport<S> {
    pub fn from_solution(cfg: &SystemConfig<S>, model: &ChainModel<S>, sol: &CoupledSolution<S>) -> Result<Self> {
        let profile = model.profile(&sol.distributions)?;
        let outage = match sol.policy {
            PolicyKind::ThroughputOriented => outage_throughput_oriented(cfg, sol, &profile)?,
            PolicyKind::FairnessOriented => outage_fairness_oriented(cfg, sol, &profile)?,
            other => return Err(Error::NotAnalyzable(other.to_string())),
        };
        let access = access_probabilities(sol.policy, Some(sol), Some(&profile), cfg.num_iods())?;
        Ok(Self {
            policy: sol.policy,
            throughput: throughput(cfg.rate_req, outage.total, cfg.block_duration),
            outage_total: outage.total,
            outage_idle: outage.idle,
            outage_per_iod: outage.per_iod,
            fairness: fairness_index(&access),
            fairness_raw: fairness_index_raw(&access),
            charging_rounds: access.iter().map(|&u| charging_rounds(u)).collect(),
            access_probs: access,
            converged: sol.converged,
            iterations: sol.iterations_used,
            residual: sol.final_residual,
        })
    }

    /// Column names; per-IoD columns are suffixed with the 1-based IoD index.
    pub fn csv_header(num_iods: usize) -> Vec<String> {
        let mut cols: Vec<String> = [
            "policy",
            "outage_total",
            "outage_idle",
            "throughput",
            "fairness",
            "fairness_raw",
            "converged",
            "iterations",
            "residual",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for prefix in ["outage", "access", "rounds"] {
            cols.extend((1..=num_iods).map(|i| format!("{prefix}_{i}")));
        }
        cols
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut f = vec![
            self.policy.to_string(),
            fmt_num(self.outage_total),
            fmt_num(self.outage_idle),
            fmt_num(self.throughput),
            fmt_num(self.fairness),
            fmt_num(self.fairness_raw),
            self.converged.to_string(),
            self.iterations.to_string(),
            format!("{:e}", self.residual),
        ];
        for v in [&self.outage_per_iod, &self.access_probs, &self.charging_rounds] {
            f.extend(v.iter().map(|&x| fmt_num(x)));
        }
        f
    }
}

pub(crate) fn fmt_num<S: Scalar>(x: S) -> String {
    let v = x.to_f64_lossy();
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.12e}")
    }
}

/// Solves the coupled chains and evaluates every closed-form metric.
pub fn analyze<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    tol: &ToleranceConfig,
) -> Result<AnalysisReport<S>> {
    analyze_with(cfg, policy, &SolverOptions { tol: *tol, ..SolverOptions::default() })
}

pub fn analyze_with<S: Scalar>(
    cfg: &SystemConfig<S>,
    policy: PolicyKind,
    opts: &SolverOptions,
) -> Result<AnalysisReport<S>> {
    let model = ChainModel::new(cfg, policy)?;
    let sol = solve_coupled_with(&model, opts, None)?;
    sol.ensure_converged()?;
    AnalysisReport::from_solution(cfg, &model, &sol)
}
