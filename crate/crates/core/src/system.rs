//! Physical and model parameters of the full-duplex wireless-powered system.
//!
//! All quantities are SI (watts, joules, seconds). dBm inputs are converted
//! once, when a configuration document is loaded.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::RicianChannel;
use crate::scalar::Scalar;

/// Upper bound on `K` and `M`; per-state tables are allocated eagerly.
pub const MAX_LEVELS: usize = 1 << 20;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig<S = f64> {
    /// `P_H`, HAP transmit power (W).
    pub hap_power: S,
    /// `N₀`, receiver noise power (W).
    pub noise_power: S,
    /// `η`, RF-to-DC conversion efficiency.
    pub conversion_eff: S,
    /// `C`, battery capacity (J).
    pub battery_capacity: S,
    /// `K`, number of non-empty battery levels.
    pub num_levels: usize,
    /// `M`, waiting-time cap of the fairness-oriented policy.
    pub max_wait: usize,
    /// `Ψ`, LoS-to-scatter power ratio shared by all links.
    pub rician_factor: S,
    /// `α`, residual self-interference loop gain.
    pub si_gain: S,
    /// `T`, block duration (s).
    pub block_duration: S,
    /// `R`, rate requirement (bit/s/Hz).
    pub rate_req: S,
    /// `d_i`, HAP distance of each IoD (m); its length is `L`.
    pub distances: Vec<S>,
    /// `ε`, path-loss exponent.
    pub pathloss_exp: S,
}

/// Battery level `k` and its energy `ε_k = kC/K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel<S = f64> {
    pub index: usize,
    pub joules: S,
}

impl<S: Scalar> SystemConfig<S> {
    /// Common parameters of the evaluation setups, with the given distances.
    pub fn with_distances(distances: Vec<S>) -> Self {
        Self {
            hap_power: S::lit(DEFAULT_HAP_POWER_W),
            noise_power: S::lit(dbm_to_watts(-60.0)),
            conversion_eff: S::lit(0.5),
            battery_capacity: S::lit(5e-4),
            num_levels: 200,
            max_wait: 50,
            rician_factor: S::lit(6.0),
            si_gain: S::lit(1e-7),
            block_duration: S::one(),
            rate_req: S::lit(2.0),
            distances,
            pathloss_exp: S::lit(3.0),
        }
    }

    pub fn preset(preset: Preset, num_iods: Option<usize>) -> Result<Self> {
        let d = preset.distances(num_iods)?;
        Self::with_distances(d.into_iter().map(S::lit).collect()).validated()
    }

    /// Reduced sizes (K = 50, M = 10, first three IoDs) for desk-scale runs.
    pub fn scaled(mut self) -> Self {
        self.num_levels = 50;
        self.max_wait = 10;
        self.distances.truncate(3);
        self
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = S::zero();
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        let finite_pos = |v: S| v.is_finite() && v > zero;
        if self.distances.is_empty() {
            return bad("at least one IoD is required");
        }
        if !(self.conversion_eff > zero && self.conversion_eff < S::one()) {
            return bad("conversion efficiency must lie in (0, 1)");
        }
        if !finite_pos(self.battery_capacity) {
            return bad("battery capacity must be positive");
        }
        if self.num_levels == 0 || self.num_levels > MAX_LEVELS {
            return Err(Error::Config(format!("num_levels must lie in 1..={MAX_LEVELS}")));
        }
        if self.max_wait == 0 || self.max_wait > MAX_LEVELS {
            return Err(Error::Config(format!("max_wait must lie in 1..={MAX_LEVELS}")));
        }
        if !finite_pos(self.block_duration) {
            return bad("block duration must be positive");
        }
        if !finite_pos(self.rate_req) {
            return bad("rate requirement must be positive");
        }
        if !(self.si_gain >= zero && self.si_gain.is_finite()) {
            return bad("self-interference gain must be non-negative");
        }
        if !finite_pos(self.hap_power) {
            return bad("HAP power must be positive");
        }
        if !(self.noise_power >= zero && self.noise_power.is_finite()) {
            return bad("noise power must be non-negative");
        }
        if !(self.rician_factor >= zero && self.rician_factor.is_finite()) {
            return bad("Rician factor must be non-negative");
        }
        if !(self.pathloss_exp >= S::lit(2.0) && self.pathloss_exp <= S::lit(5.0)) {
            return bad("path-loss exponent must lie in [2, 5]");
        }
        if let Some(d) = self.distances.iter().find(|&&d| !finite_pos(d)) {
            return Err(Error::Config(format!("distances must be positive, got {d}")));
        }
        Ok(())
    }

    pub fn num_iods(&self) -> usize {
        self.distances.len()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.num_iods() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, num_iods: self.num_iods() })
        }
    }

    /// `H̄_i = 1/(1 + d_i^ε)` for the zero-based IoD index `i`.
    pub fn mean_gain(&self, i: usize) -> Result<S> {
        self.check_index(i)?;
        Ok(path_gain(self.distances[i], self.pathloss_exp))
    }

    pub fn mean_gains(&self) -> Vec<S> {
        self.distances.iter().map(|&d| path_gain(d, self.pathloss_exp)).collect()
    }

    /// Uplink and downlink power-gain law of IoD `i`.
    pub fn channel(&self, i: usize) -> Result<RicianChannel<S>> {
        RicianChannel::new(self.mean_gain(i)?, self.rician_factor)
    }

    /// Noise plus residual self-interference, `N₀ + P_H α`.
    pub fn interference_power(&self) -> S {
        self.noise_power + self.hap_power * self.si_gain
    }

    /// `γ = P_i H^U / (N₀ + P_H α)`.
    pub fn uplink_sinr(&self, transmit_power: S, uplink_gain: S) -> S {
        transmit_power * uplink_gain / self.interference_power()
    }

    /// `Ẽ = η P_H H^D T`.
    pub fn harvested_energy(&self, downlink_gain: S) -> S {
        self.conversion_eff * self.hap_power * downlink_gain * self.block_duration
    }

    /// `φ_i = η P_H H̄_i T`, the mean harvest per block.
    pub fn mean_harvest(&self, i: usize) -> Result<S> {
        Ok(self.conversion_eff * self.hap_power * self.mean_gain(i)? * self.block_duration)
    }

    pub fn level_energy(&self, k: usize) -> S {
        S::from_usize_lossy(k) * self.battery_capacity / S::from_usize_lossy(self.num_levels)
    }

    pub fn level(&self, k: usize) -> EnergyLevel<S> {
        EnergyLevel { index: k, joules: self.level_energy(k) }
    }

    /// Largest level with `ε_k ≤ e`, capped at `K`. A value landing exactly on
    /// a level boundary maps to that (higher) level.
    pub fn discretize_energy(&self, e: S) -> EnergyLevel<S> {
        self.level(self.discretize_index(e))
    }

    pub fn discretize_index(&self, e: S) -> usize {
        if !(e > S::zero()) {
            return 0;
        }
        let kk = self.num_levels;
        let raw = (e * S::from_usize_lossy(kk) / self.battery_capacity).floor();
        if raw >= S::from_usize_lossy(kk) {
            return kk;
        }
        let mut k = raw.to_usize().unwrap_or(0);
        while k < kk && self.level_energy(k + 1) <= e {
            k += 1;
        }
        while k > 0 && self.level_energy(k) > e {
            k -= 1;
        }
        k
    }

    /// SINR threshold `2^R − 1`.
    pub fn sinr_threshold(&self) -> S {
        S::lit(2.0).powf(self.rate_req) - S::one()
    }

    /// Uplink power gain below which a transmission of the whole battery
    /// content `ε_k` is in outage: `K(2^R−1)(αP_H+N₀)T/(kC)`.
    pub fn outage_gain_threshold(&self, k: usize) -> S {
        debug_assert!(k >= 1);
        self.sinr_threshold() * self.interference_power() * self.block_duration / self.level_energy(k)
    }

    /// Applies one flat `key = value` override.
    pub fn apply_override(&mut self, key: &str, value: &Value) -> Result<()> {
        let num = || {
            value.as_f64().map(S::lit).ok_or_else(|| Error::Config(format!("`{key}` expects a number, got {value}")))
        };
        let int = || {
            value
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| Error::Config(format!("`{key}` expects a non-negative integer, got {value}")))
        };
        match key {
            "hap_power" | "hap_power_w" => self.hap_power = num()?,
            "hap_power_dbm" => self.hap_power = S::lit(dbm_to_watts(num()?.to_f64_lossy())),
            "noise_power" | "noise_power_w" => self.noise_power = num()?,
            "noise_power_dbm" => self.noise_power = S::lit(dbm_to_watts(num()?.to_f64_lossy())),
            "conversion_eff" => self.conversion_eff = num()?,
            "battery_capacity" => self.battery_capacity = num()?,
            "num_levels" => self.num_levels = int()?,
            "max_wait" => self.max_wait = int()?,
            "rician_factor" => self.rician_factor = num()?,
            "si_gain" => self.si_gain = num()?,
            "block_duration" => self.block_duration = num()?,
            "rate_req" => self.rate_req = num()?,
            "pathloss_exp" => self.pathloss_exp = num()?,
            "distances" => {
                let arr = value
                    .as_array()
                    .ok_or_else(|| Error::Config(format!("`distances` expects an array, got {value}")))?;
                self.distances = arr
                    .iter()
                    .map(|v| v.as_f64().map(S::lit).ok_or_else(|| Error::Config(format!("bad distance {v}"))))
                    .collect::<Result<_>>()?;
            }
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }
}

impl SystemConfig<f64> {
    /// Builds a configuration from a flat JSON object. The optional `preset`
    /// and `num_iods` keys select the starting point; every other key is an
    /// override applied in document order.
    pub fn from_json_value(doc: &Value) -> Result<Self> {
        let obj =
            doc.as_object().ok_or_else(|| Error::Config("configuration document must be a JSON object".into()))?;
        let preset = match obj.get("preset") {
            Some(Value::String(s)) => s.parse()?,
            Some(other) => return Err(Error::Config(format!("`preset` expects a string, got {other}"))),
            None => Preset::S1,
        };
        let num_iods = match obj.get("num_iods") {
            Some(v) => {
                Some(v.as_u64().ok_or_else(|| Error::Config(format!("`num_iods` expects an integer, got {v}")))?
                    as usize)
            }
            None => None,
        };
        let mut cfg = Self::preset(preset, num_iods)?;
        for (k, v) in obj {
            if k == "preset" || k == "num_iods" {
                continue;
            }
            cfg.apply_override(k, v)?;
        }
        cfg.validated()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_json_value(&doc)
    }
}

fn path_gain<S: Scalar>(d: S, exponent: S) -> S {
    S::one() / (S::one() + d.powf(exponent))
}

/// HAP power of the built-in setups (W).
pub const DEFAULT_HAP_POWER_W: f64 = 1.0;

/// Built-in IoD placements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// d = 8, 9, 10, 11, 12 m.
    S1,
    /// d = 5, 9, 10, 11, 12 m.
    S2,
    /// Every IoD at 10 m.
    Equal10,
    /// d_i = 7 + i m.
    Step7,
}

impl Preset {
    pub fn distances(self, num_iods: Option<usize>) -> Result<Vec<f64>> {
        let fixed = |base: [f64; 5]| -> Result<Vec<f64>> {
            match num_iods {
                None => Ok(base.to_vec()),
                Some(l) if (1..=5).contains(&l) => Ok(base[..l].to_vec()),
                Some(l) => Err(Error::Config(format!("preset {self} defines at most 5 IoDs, asked for {l}"))),
            }
        };
        match self {
            Preset::S1 => fixed([8.0, 9.0, 10.0, 11.0, 12.0]),
            Preset::S2 => fixed([5.0, 9.0, 10.0, 11.0, 12.0]),
            Preset::Equal10 | Preset::Step7 => {
                let l = num_iods.unwrap_or(5);
                if l == 0 {
                    return Err(Error::Config("num_iods must be at least 1".into()));
                }
                Ok((1..=l).map(|i| if self == Preset::Equal10 { 10.0 } else { 7.0 + i as f64 }).collect())
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::S1 => "s1",
            Preset::S2 => "s2",
            Preset::Equal10 => "equal10",
            Preset::Step7 => "step7",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Preset::S1),
            "s2" => Ok(Preset::S2),
            "equal10" => Ok(Preset::Equal10),
            "step7" => Ok(Preset::Step7),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> SystemConfig {
        SystemConfig::preset(Preset::S1, None).unwrap()
    }

    #[test]
    fn mean_gain_formula() {
        let mut cfg = s1();
        cfg.distances = vec![10.0, 8.0, 12.0, 1e-9];
        assert!((cfg.mean_gain(0).unwrap() - 1.0 / 1001.0).abs() < 1e-18);
        assert!(cfg.mean_gain(1).unwrap() > cfg.mean_gain(2).unwrap());
        assert!((cfg.mean_gain(3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cfg.mean_gain(4), Err(Error::IndexOutOfRange { index: 4, num_iods: 4 }));
    }

    #[test]
    fn sinr_and_harvest_arithmetic() {
        let mut cfg = s1();
        assert_eq!(cfg.uplink_sinr(0.0, 1e-3), 0.0);
        cfg.si_gain = 0.0;
        cfg.noise_power = 1e-9;
        assert!((cfg.uplink_sinr(1e-3, 1e-3) - 1e3).abs() < 1e-9);

        cfg.conversion_eff = 0.5;
        cfg.hap_power = 2.0;
        assert_eq!(cfg.harvested_energy(0.0), 0.0);
        assert!((cfg.harvested_energy(1e-3) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn default_interference_is_si_dominated() {
        let cfg = s1();
        assert!((cfg.noise_power - 1e-9).abs() < 1e-21);
        assert!(cfg.hap_power * cfg.si_gain > 10.0 * cfg.noise_power);
    }

    #[test]
    fn discretization_floors_and_caps() {
        let mut cfg = s1();
        cfg.battery_capacity = 1.0;
        cfg.num_levels = 10;
        assert_eq!(cfg.discretize_energy(0.05).index, 0);
        assert_eq!(cfg.discretize_energy(0.999).index, 9);
        assert_eq!(cfg.discretize_energy(7.3).index, 10);
        assert_eq!(cfg.discretize_energy(0.0).index, 0);
        // exact boundaries map to the boundary level
        for k in 0..=10 {
            assert_eq!(cfg.discretize_index(cfg.level_energy(k)), k);
        }
    }

    #[test]
    fn outage_threshold_matches_sinr_condition() {
        let cfg = s1();
        let k = 7;
        let h = cfg.outage_gain_threshold(k);
        let p = cfg.level_energy(k) / cfg.block_duration;
        let at = cfg.uplink_sinr(p, h);
        assert!((at - cfg.sinr_threshold()).abs() < 1e-9 * cfg.sinr_threshold());
    }

    #[test]
    fn json_document_overrides_preset() {
        let cfg = SystemConfig::from_json_str(
            r#"{"preset": "s2", "num_iods": 3, "hap_power_dbm": 20, "num_levels": 50, "rate_req": 1.5}"#,
        )
        .unwrap();
        assert_eq!(cfg.distances, vec![5.0, 9.0, 10.0]);
        assert!((cfg.hap_power - 0.1).abs() < 1e-15);
        assert_eq!(cfg.num_levels, 50);
        assert_eq!(cfg.rate_req, 1.5);
    }

    #[test]
    fn json_document_rejects_unknown_keys_and_bad_values() {
        assert!(SystemConfig::from_json_str(r#"{"warp_factor": 9}"#).is_err());
        assert!(SystemConfig::from_json_str(r#"{"conversion_eff": 1.5}"#).is_err());
        assert!(SystemConfig::from_json_str(r#"{"preset": "s9"}"#).is_err());
        assert!(SystemConfig::from_json_str(r#"{"pathloss_exp": 6}"#).is_err());
    }

    #[test]
    fn step_and_equal_presets() {
        assert_eq!(Preset::Step7.distances(Some(3)).unwrap(), vec![8.0, 9.0, 10.0]);
        assert_eq!(Preset::Equal10.distances(Some(2)).unwrap(), vec![10.0, 10.0]);
        assert!(Preset::S1.distances(Some(6)).is_err());
    }

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watts(-60.0) - 1e-9).abs() < 1e-24);
        assert!((watts_to_dbm(dbm_to_watts(13.0)) - 13.0).abs() < 1e-12);
    }
}
