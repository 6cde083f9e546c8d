//! Battery chain of the throughput-oriented policy.
//!
//! Each IoD's battery is a chain on levels `0..=K`. A non-empty IoD at level
//! `k` is scheduled with probability `υ_{i,k}` and then drains to level 0;
//! otherwise it harvests and moves up (capped at `K`). The selection
//! probabilities couple the chains through the other IoDs' stationary laws.

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::harvest::HarvestLaw;
use crate::scalar::Scalar;
use crate::system::SystemConfig;

/// Per-IoD, per-state probability of being scheduled. For the
/// throughput-oriented policy rows are indexed by battery level; for the
/// fairness-oriented policy by joint state index.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProfile<S = f64> {
    pub probs: Vec<Vec<S>>,
}

impl<S: Scalar> SelectionProfile<S> {
    pub fn row(&self, i: usize) -> &[S] {
        &self.probs[i]
    }

    pub fn num_iods(&self) -> usize {
        self.probs.len()
    }
}

/// Selection statistic `ε_k H̄_i`.
#[inline]
pub fn weighted_energy<S: Scalar>(energy: S, mean_gain: S) -> S {
    energy * mean_gain
}

/// Precomputed state of the throughput-oriented analysis for one config.
#[derive(Debug, Clone)]
pub struct ThroughputModel<S = f64> {
    num_levels: usize,
    gains: Vec<S>,
    levels: Vec<S>,
    laws: Vec<HarvestLaw<S>>,
}

impl<S: Scalar> ThroughputModel<S> {
    pub fn new(cfg: &SystemConfig<S>) -> Result<Self> {
        cfg.validate()?;
        let laws = (0..cfg.num_iods()).map(|i| HarvestLaw::new(cfg, i)).collect::<Result<_>>()?;
        Ok(Self {
            num_levels: cfg.num_levels,
            gains: cfg.mean_gains(),
            levels: (0..=cfg.num_levels).map(|k| cfg.level_energy(k)).collect(),
            laws,
        })
    }

    pub fn num_iods(&self) -> usize {
        self.gains.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_levels + 1
    }

    pub fn weighted(&self, i: usize, k: usize) -> S {
        weighted_energy(self.levels[k], self.gains[i])
    }

    pub fn law(&self, i: usize) -> &HarvestLaw<S> {
        &self.laws[i]
    }

    pub(crate) fn check_distributions(&self, pis: &[Vec<S>]) -> Result<()> {
        check_shapes(pis, self.num_iods(), self.num_states())
    }

    /// Number of levels of IoD `p` that lose against statistic `w` held by
    /// IoD `i`: strictly lower for `p < i`, lower or equal for `p > i`.
    fn losing_levels(&self, p: usize, i: usize, w: S) -> usize {
        count_below(self.num_states(), |q| {
            let wq = self.weighted(p, q);
            if p < i {
                wq < w
            } else {
                wq <= w
            }
        })
    }

    fn prefix_sums(pis: &[Vec<S>]) -> Vec<Vec<S>> {
        pis.iter()
            .map(|pi| {
                let mut acc = S::zero();
                std::iter::once(S::zero())
                    .chain(pi.iter().map(|&v| {
                        acc = acc + v;
                        acc
                    }))
                    .collect()
            })
            .collect()
    }

    fn selection_with_prefix(&self, prefix: &[Vec<S>], i: usize, k: usize) -> S {
        if k == 0 {
            return S::zero();
        }
        let w = self.weighted(i, k);
        (0..self.num_iods())
            .filter(|&p| p != i)
            .map(|p| prefix[p][self.losing_levels(p, i, w)])
            .fold(S::one(), |acc, m| acc * m.min(S::one()))
    }

    /// `υ_{i,k}`: probability that IoD `i` at level `k` is scheduled when every
    /// other IoD sits independently at its stationary level.
    pub fn selection_prob(&self, pis: &[Vec<S>], i: usize, k: usize) -> Result<S> {
        self.check_distributions(pis)?;
        if i >= self.num_iods() {
            return Err(Error::IndexOutOfRange { index: i, num_iods: self.num_iods() });
        }
        if k > self.num_levels {
            return Err(Error::Domain(format!("level {k} exceeds K = {}", self.num_levels)));
        }
        Ok(self.selection_with_prefix(&Self::prefix_sums(pis), i, k))
    }

    pub fn profile(&self, pis: &[Vec<S>]) -> Result<SelectionProfile<S>> {
        self.check_distributions(pis)?;
        let prefix = Self::prefix_sums(pis);
        let probs = (0..self.num_iods())
            .map(|i| (0..self.num_states()).map(|k| self.selection_with_prefix(&prefix, i, k)).collect())
            .collect();
        Ok(SelectionProfile { probs })
    }

    /// Emits the transitions out of level `k` for IoD `i`.
    fn row(&self, i: usize, k: usize, upsilon: S, mut sink: impl FnMut(usize, S)) {
        let (send, stay) = if k == 0 { (S::zero(), S::one()) } else { (upsilon, S::one() - upsilon) };
        if send > S::zero() {
            sink(0, send);
        }
        if stay > S::zero() {
            self.laws[i].spread(k, stay, sink);
        }
    }

    /// One chain step `Zᵢᵀ π` without materializing `Zᵢ`.
    pub fn step(&self, i: usize, upsilon: &[S], pi: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.num_states()];
        for (k, &mass) in pi.iter().enumerate() {
            if mass == S::zero() {
                continue;
            }
            self.row(i, k, upsilon[k], |l, p| out[l] = out[l] + mass * p);
        }
        out
    }

    pub fn matrix(&self, i: usize, upsilon: &[S]) -> Result<TransitionMatrix<S>> {
        check_profile_row(upsilon, self.num_states())?;
        let mut z = TransitionMatrix::zeros(self.num_states());
        for k in 0..self.num_states() {
            self.row(i, k, upsilon[k], |l, p| z.add(k, l, p));
        }
        Ok(z)
    }
}

/// Length of the prefix of `0..n` on which the monotone predicate holds.
pub(crate) fn count_below(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(crate) fn check_shapes<S: Scalar>(pis: &[Vec<S>], num_iods: usize, num_states: usize) -> Result<()> {
    if pis.len() != num_iods {
        return Err(Error::Domain(format!("expected {num_iods} distributions, got {}", pis.len())));
    }
    if let Some((i, pi)) = pis.iter().enumerate().find(|(_, pi)| pi.len() != num_states) {
        return Err(Error::Domain(format!("distribution {i} has {} states, expected {num_states}", pi.len())));
    }
    Ok(())
}

pub(crate) fn check_profile_row<S: Scalar>(upsilon: &[S], num_states: usize) -> Result<()> {
    if upsilon.len() != num_states {
        return Err(Error::Domain(format!("profile row has {} entries, expected {num_states}", upsilon.len())));
    }
    if let Some(v) = upsilon.iter().find(|&&v| !(v >= S::zero() && v <= S::one())) {
        return Err(Error::Domain(format!("selection probability {v} outside [0, 1]")));
    }
    Ok(())
}

/// `υ^T_{i,k}` for one IoD and level.
pub fn selection_prob_throughput<S: Scalar>(cfg: &SystemConfig<S>, pis: &[Vec<S>], i: usize, k: usize) -> Result<S> {
    ThroughputModel::new(cfg)?.selection_prob(pis, i, k)
}

pub fn selection_profile_throughput<S: Scalar>(cfg: &SystemConfig<S>, pis: &[Vec<S>]) -> Result<SelectionProfile<S>> {
    ThroughputModel::new(cfg)?.profile(pis)
}

/// `(K+1)×(K+1)` battery transition matrix of IoD `i` for the given row of
/// selection probabilities.
pub fn build_chain_throughput<S: Scalar>(
    cfg: &SystemConfig<S>,
    i: usize,
    upsilon: &[S],
) -> Result<TransitionMatrix<S>> {
    if i >= cfg.num_iods() {
        return Err(Error::IndexOutOfRange { index: i, num_iods: cfg.num_iods() });
    }
    ThroughputModel::new(cfg)?.matrix(i, upsilon)
}
