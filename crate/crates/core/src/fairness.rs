//! Joint battery × waiting-time chain of the fairness-oriented policy.
//!
//! An IoD's state is `(k, m)`: battery level `k ∈ 0..=K` and blocks waited
//! since its last transmission `m ∈ 1..=M`. Scheduling compares normalized
//! accumulated energy `ε_k / min(m φ_i, C)`, except that non-empty IoDs that
//! reached the waiting cap `M` preempt everyone else and are ranked among
//! themselves by weighted residual energy `ε_k H̄_i`.

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::harvest::HarvestLaw;
use crate::scalar::Scalar;
use crate::system::SystemConfig;
use crate::throughput::{check_profile_row, check_shapes, count_below, weighted_energy, SelectionProfile};

/// Selection probabilities of the fairness-oriented policy, rows indexed by
/// [`JointState::index`].
pub type FairSelectionProfile<S = f64> = SelectionProfile<S>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointState {
    pub level: usize,
    /// Waiting blocks, `1..=M`.
    pub wait: usize,
}

impl JointState {
    pub fn new(level: usize, wait: usize) -> Self {
        debug_assert!(wait >= 1);
        Self { level, wait }
    }

    /// Flattened index `k·M + (m − 1)`.
    #[inline]
    pub fn index(self, max_wait: usize) -> usize {
        self.level * max_wait + (self.wait - 1)
    }

    #[inline]
    pub fn from_index(idx: usize, max_wait: usize) -> Self {
        Self { level: idx / max_wait, wait: idx % max_wait + 1 }
    }
}

/// `r / min(W φ, C)`; shared verbatim by the analysis and the simulator so
/// both sides rank ties identically.
#[inline]
pub fn normalized_ratio<S: Scalar>(energy: S, wait: usize, mean_harvest: S, capacity: S) -> S {
    energy / (S::from_usize_lossy(wait) * mean_harvest).min(capacity)
}

/// Normalized accumulated energy of IoD `i` in state `(k, m)`.
pub fn normalized_energy<S: Scalar>(cfg: &SystemConfig<S>, i: usize, k: usize, m: usize) -> Result<S> {
    if k > cfg.num_levels || m == 0 || m > cfg.max_wait {
        return Err(Error::Domain(format!("state ({k}, {m}) outside 0..={} × 1..={}", cfg.num_levels, cfg.max_wait)));
    }
    Ok(normalized_ratio(cfg.level_energy(k), m, cfg.mean_harvest(i)?, cfg.battery_capacity))
}

#[derive(Debug, Clone)]
pub struct FairnessModel<S = f64> {
    num_levels: usize,
    max_wait: usize,
    capacity: S,
    gains: Vec<S>,
    phis: Vec<S>,
    levels: Vec<S>,
    laws: Vec<HarvestLaw<S>>,
    /// Per IoD: the non-empty, pre-deadline states sorted by normalized energy.
    ranked: Vec<Vec<(S, usize)>>,
}

impl<S: Scalar> FairnessModel<S> {
    pub fn new(cfg: &SystemConfig<S>) -> Result<Self> {
        cfg.validate()?;
        let laws = (0..cfg.num_iods()).map(|i| HarvestLaw::new(cfg, i)).collect::<Result<_>>()?;
        let phis: Vec<S> = (0..cfg.num_iods()).map(|i| cfg.mean_harvest(i)).collect::<Result<_>>()?;
        let levels: Vec<S> = (0..=cfg.num_levels).map(|k| cfg.level_energy(k)).collect();
        let (kk, mm) = (cfg.num_levels, cfg.max_wait);
        let ranked = phis
            .iter()
            .map(|&phi| {
                let mut v: Vec<(S, usize)> = (1..=kk)
                    .flat_map(|k| (1..mm).map(move |m| (k, m)))
                    .map(|(k, m)| {
                        (normalized_ratio(levels[k], m, phi, cfg.battery_capacity), JointState::new(k, m).index(mm))
                    })
                    .collect();
                v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite normalized energy"));
                v
            })
            .collect();
        Ok(Self {
            num_levels: kk,
            max_wait: mm,
            capacity: cfg.battery_capacity,
            gains: cfg.mean_gains(),
            phis,
            levels,
            laws,
            ranked,
        })
    }

    pub fn num_iods(&self) -> usize {
        self.gains.len()
    }

    pub fn num_states(&self) -> usize {
        (self.num_levels + 1) * self.max_wait
    }

    pub fn max_wait(&self) -> usize {
        self.max_wait
    }

    pub fn normalized(&self, i: usize, k: usize, m: usize) -> S {
        normalized_ratio(self.levels[k], m, self.phis[i], self.capacity)
    }

    pub fn weighted(&self, i: usize, k: usize) -> S {
        weighted_energy(self.levels[k], self.gains[i])
    }

    fn idx(&self, k: usize, m: usize) -> usize {
        JointState::new(k, m).index(self.max_wait)
    }

    fn summaries(&self, pis: &[Vec<S>]) -> Vec<Summary<S>> {
        let mm = self.max_wait;
        pis.iter()
            .enumerate()
            .map(|(p, pi)| {
                let empty: S = (1..=mm).map(|m| pi[self.idx(0, m)]).sum();
                let waiting: S = (0..=self.num_levels)
                    .flat_map(|k| (1..mm).map(move |m| (k, m)))
                    .map(|(k, m)| pi[self.idx(k, m)])
                    .sum();
                let mut acc = S::zero();
                let ranked_prefix = std::iter::once(S::zero())
                    .chain(self.ranked[p].iter().map(|&(_, idx)| {
                        acc = acc + pi[idx];
                        acc
                    }))
                    .collect();
                let mut acc = S::zero();
                let deadline_prefix = std::iter::once(S::zero())
                    .chain((0..=self.num_levels).map(|k| {
                        acc = acc + pi[self.idx(k, mm)];
                        acc
                    }))
                    .collect();
                Summary { empty, waiting, ranked_prefix, deadline_prefix }
            })
            .collect()
    }

    fn selection_with(&self, sums: &[Summary<S>], i: usize, k: usize, m: usize) -> S {
        if k == 0 {
            return S::zero();
        }
        let others = (0..self.num_iods()).filter(|&p| p != i);
        if m < self.max_wait {
            let v = self.normalized(i, k, m);
            others
                .map(|p| {
                    let ranked = &self.ranked[p];
                    let n = count_below(ranked.len(), |t| if p < i { ranked[t].0 < v } else { ranked[t].0 <= v });
                    sums[p].empty + sums[p].ranked_prefix[n]
                })
                .fold(S::one(), |acc, x| acc * x.min(S::one()))
        } else {
            let w = self.weighted(i, k);
            others
                .map(|p| {
                    let n = count_below(self.num_levels + 1, |q| {
                        let wq = self.weighted(p, q);
                        if p < i {
                            wq < w
                        } else {
                            wq <= w
                        }
                    });
                    sums[p].waiting + sums[p].deadline_prefix[n]
                })
                .fold(S::one(), |acc, x| acc * x.min(S::one()))
        }
    }

    /// `υ^F_{i,(k,m)}` under independent stationary competitors.
    pub fn selection_prob(&self, pis: &[Vec<S>], i: usize, state: JointState) -> Result<S> {
        check_shapes(pis, self.num_iods(), self.num_states())?;
        if i >= self.num_iods() {
            return Err(Error::IndexOutOfRange { index: i, num_iods: self.num_iods() });
        }
        if state.level > self.num_levels || state.wait == 0 || state.wait > self.max_wait {
            return Err(Error::Domain(format!("state {state:?} outside the joint state space")));
        }
        Ok(self.selection_with(&self.summaries(pis), i, state.level, state.wait))
    }

    pub fn profile(&self, pis: &[Vec<S>]) -> Result<FairSelectionProfile<S>> {
        check_shapes(pis, self.num_iods(), self.num_states())?;
        let sums = self.summaries(pis);
        let probs = (0..self.num_iods())
            .map(|i| {
                (0..self.num_states())
                    .map(|idx| {
                        let s = JointState::from_index(idx, self.max_wait);
                        self.selection_with(&sums, i, s.level, s.wait)
                    })
                    .collect()
            })
            .collect();
        Ok(SelectionProfile { probs })
    }

    fn row(&self, i: usize, idx: usize, upsilon: S, mut sink: impl FnMut(usize, S)) {
        let s = JointState::from_index(idx, self.max_wait);
        let (send, stay) = if s.level == 0 { (S::zero(), S::one()) } else { (upsilon, S::one() - upsilon) };
        if send > S::zero() {
            sink(self.idx(0, 1), send);
        }
        if stay > S::zero() {
            let next_wait = (s.wait + 1).min(self.max_wait);
            let mm = self.max_wait;
            self.laws[i].spread(s.level, stay, |l, p| sink(l * mm + (next_wait - 1), p));
        }
    }

    pub fn step(&self, i: usize, upsilon: &[S], pi: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.num_states()];
        for (idx, &mass) in pi.iter().enumerate() {
            if mass == S::zero() {
                continue;
            }
            self.row(i, idx, upsilon[idx], |t, p| out[t] = out[t] + mass * p);
        }
        out
    }

    pub fn matrix(&self, i: usize, upsilon: &[S]) -> Result<TransitionMatrix<S>> {
        check_profile_row(upsilon, self.num_states())?;
        let mut z = TransitionMatrix::zeros(self.num_states());
        for idx in 0..self.num_states() {
            self.row(i, idx, upsilon[idx], |t, p| z.add(idx, t, p));
        }
        Ok(z)
    }
}

struct Summary<S> {
    /// Mass of all empty-battery states; these never compete.
    empty: S,
    /// Mass of all states with `m < M`.
    waiting: S,
    /// Prefix masses along the normalized-energy ranking.
    ranked_prefix: Vec<S>,
    /// Prefix masses of the wait-`M` states over levels.
    deadline_prefix: Vec<S>,
}

pub fn selection_prob_fair<S: Scalar>(cfg: &SystemConfig<S>, pis: &[Vec<S>], i: usize, state: JointState) -> Result<S> {
    FairnessModel::new(cfg)?.selection_prob(pis, i, state)
}

pub fn selection_profile_fair<S: Scalar>(cfg: &SystemConfig<S>, pis: &[Vec<S>]) -> Result<FairSelectionProfile<S>> {
    FairnessModel::new(cfg)?.profile(pis)
}

/// `(K+1)M × (K+1)M` joint transition matrix of IoD `i`.
pub fn build_chain_fair<S: Scalar>(cfg: &SystemConfig<S>, i: usize, upsilon: &[S]) -> Result<TransitionMatrix<S>> {
    if i >= cfg.num_iods() {
        return Err(Error::IndexOutOfRange { index: i, num_iods: cfg.num_iods() });
    }
    FairnessModel::new(cfg)?.matrix(i, upsilon)
}
