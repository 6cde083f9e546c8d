//! Discretized energy-harvesting increments.
//!
//! During an EH block IoD `i` gains `Ẽ = η P_H H^D_i T`, which the battery
//! model floors to whole levels. The increment is `j` levels when
//! `jC/K ≤ Ẽ < (j+1)C/K`, i.e. when `H^D_i` falls in
//! `[x_j, x_{j+1})` with `x_j = jC/(K η P_H T)`.

use crate::error::{Error, Result};
use crate::numerics::RicianChannel;
use crate::scalar::Scalar;
use crate::system::SystemConfig;

/// Tabulated increment law of one IoD for levels `0..=K`.
#[derive(Debug, Clone)]
pub struct HarvestLaw<S = f64> {
    /// `F(x_j)` for `j = 0..=K`.
    cdf: Vec<S>,
    /// `1 − F(x_j)` for `j = 0..=K`.
    ccdf: Vec<S>,
}

impl<S: Scalar> HarvestLaw<S> {
    pub fn new(cfg: &SystemConfig<S>, i: usize) -> Result<Self> {
        let ch = cfg.channel(i)?;
        let (cdf, ccdf) = (0..=cfg.num_levels)
            .map(|j| ch.cdf_pair(gain_threshold(cfg, j)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self { cdf, ccdf })
    }

    pub fn num_levels(&self) -> usize {
        self.cdf.len() - 1
    }

    /// Probability of gaining exactly `j < K` levels before the capacity cap.
    #[inline]
    pub fn exactly(&self, j: usize) -> S {
        // difference taken on whichever side of the law is small, for precision
        if self.cdf[j + 1] <= S::lit(0.5) {
            self.cdf[j + 1] - self.cdf[j]
        } else {
            self.ccdf[j] - self.ccdf[j + 1]
        }
    }

    /// Probability of gaining at least `j` levels, `j ≤ K`.
    #[inline]
    pub fn at_least(&self, j: usize) -> S {
        self.ccdf[j]
    }

    /// Spreads `mass` from level `k` over end levels `k..=K` (the upper tail
    /// lands on `K`), calling `sink(level, mass)`.
    #[inline]
    pub fn spread(&self, k: usize, mass: S, mut sink: impl FnMut(usize, S)) {
        let kk = self.num_levels();
        for j in 0..kk - k {
            sink(k + j, mass * self.exactly(j));
        }
        sink(kk, mass * self.at_least(kk - k));
    }
}

/// `x_j = jC/(K η P_H T)`, the downlink gain that yields exactly `j` levels.
pub fn gain_threshold<S: Scalar>(cfg: &SystemConfig<S>, j: usize) -> S {
    cfg.level_energy(j) / (cfg.conversion_eff * cfg.hap_power * cfg.block_duration)
}

/// `P(lo·C/K ≤ Ẽ_i < hi·C/K)`; `hi = None` is the open upper tail.
pub fn eh_increment_prob<S: Scalar>(cfg: &SystemConfig<S>, i: usize, lo: usize, hi: Option<usize>) -> Result<S> {
    let ch: RicianChannel<S> = cfg.channel(i)?;
    match hi {
        Some(h) if h <= lo => Err(Error::Domain(format!("increment interval [{lo}, {h}) is empty"))),
        Some(h) => {
            let (f_lo, c_lo) = ch.cdf_pair(gain_threshold(cfg, lo))?;
            let (f_hi, c_hi) = ch.cdf_pair(gain_threshold(cfg, h))?;
            Ok(if f_hi <= S::lit(0.5) { f_hi - f_lo } else { c_lo - c_hi })
        }
        None => ch.ccdf(gain_threshold(cfg, lo)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Preset;

    fn small() -> SystemConfig {
        let mut cfg = SystemConfig::preset(Preset::S1, Some(3)).unwrap();
        cfg.num_levels = 8;
        cfg.hap_power = 0.05;
        cfg
    }

    #[test]
    fn total_probability() {
        let cfg = small();
        assert!((eh_increment_prob(&cfg, 1, 0, None).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_bin_is_cdf_at_one_level() {
        let cfg = small();
        let ch = cfg.channel(0).unwrap();
        let x1 = cfg.battery_capacity / (cfg.conversion_eff * cfg.hap_power * cfg.num_levels as f64);
        let want = ch.cdf(x1).unwrap();
        assert!((eh_increment_prob(&cfg, 0, 0, Some(1)).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(eh_increment_prob(&small(), 0, 3, Some(3)).is_err());
    }

    #[test]
    fn law_matches_direct_probabilities() {
        let cfg = small();
        let law = HarvestLaw::new(&cfg, 2).unwrap();
        for j in 0..cfg.num_levels {
            let direct = eh_increment_prob(&cfg, 2, j, Some(j + 1)).unwrap();
            assert!((law.exactly(j) - direct).abs() < 1e-15);
        }
        let mut total = 0.0;
        law.spread(3, 1.0, |_, p| total += p);
        assert!((total - 1.0_f64).abs() < 1e-14);
    }
}
