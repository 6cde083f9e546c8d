//! Configuration loading.
//!
//! A configuration document is a flat JSON object. Every key is optional:
//!
//! ```json
//! {
//!   "preset": "s1",            // s1 | s2 | equal10 | step7, default s1
//!   "num_iods": 3,             // leading IoDs of the preset
//!   "hap_power": 1.0,          // W; or "hap_power_dbm": 30
//!   "noise_power": 1e-9,       // W; or "noise_power_dbm": -60
//!   "conversion_eff": 0.5,
//!   "battery_capacity": 5e-4,  // J
//!   "num_levels": 200,
//!   "max_wait": 50,
//!   "rician_factor": 6,
//!   "si_gain": 1e-7,
//!   "block_duration": 1,
//!   "rate_req": 2,             // bit/s/Hz
//!   "pathloss_exp": 3,
//!   "distances": [8, 9, 10, 11, 12]
//! }
//! ```
//!
//! Precedence, lowest first: preset, `--scaled`, document keys, `--set`
//! overrides, the swept value.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};
use wpsched::{Preset, SystemConfig};

use crate::args::{ConfigArgs, PresetArg, SweepVar};
use crate::error::CliError;

/// Configuration before the sweep variable is applied.
#[derive(Debug, Clone)]
pub struct BaseConfig {
    pub preset: Preset,
    pub num_iods: Option<usize>,
    pub scaled: bool,
    /// Document keys then `--set` overrides, in application order.
    pub overrides: Vec<(String, Value)>,
}

impl BaseConfig {
    pub fn load(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut doc = match &args.config {
            Some(path) => read_document(path)?,
            None => Map::new(),
        };
        let preset = match (args.preset, doc.remove("preset")) {
            (Some(p), _) => preset_of(p),
            (None, Some(Value::String(s))) => s.parse().map_err(CliError::from)?,
            (None, Some(other)) => return Err(CliError::Config(format!("`preset` expects a string, got {other}"))),
            (None, None) => Preset::S1,
        };
        let doc_iods = match doc.remove("num_iods") {
            Some(v) => {
                Some(v.as_u64().ok_or_else(|| CliError::Config(format!("`num_iods` expects an integer, got {v}")))?
                    as usize)
            }
            None => None,
        };
        let mut overrides: Vec<(String, Value)> = doc.into_iter().collect();
        for item in &args.overrides {
            overrides.push(parse_override(item)?);
        }
        let base = Self { preset, num_iods: args.num_iods.or(doc_iods), scaled: args.scaled, overrides };
        // Fail early on bad keys or values.
        base.build(None)?;
        Ok(base)
    }

    /// The configuration with `point = (variable, value)` applied last.
    pub fn build(&self, point: Option<(SweepVar, f64)>) -> Result<SystemConfig, CliError> {
        let num_iods = match point {
            Some((SweepVar::NumIods, v)) => Some(as_count(v)?),
            _ => self.num_iods,
        };
        let mut cfg = SystemConfig::preset(self.preset, num_iods)?;
        if self.scaled {
            let keep = cfg.num_iods();
            cfg = cfg.scaled();
            if num_iods.is_some() {
                // An explicit IoD count wins over the scaled default of three.
                cfg.distances = self.preset.distances(Some(keep))?;
            }
        }
        for (k, v) in &self.overrides {
            cfg.apply_override(k, v)?;
        }
        match point {
            Some((SweepVar::Rate, v)) => cfg.rate_req = v,
            Some((SweepVar::HapPower, v)) => cfg.hap_power = v,
            Some((SweepVar::NumIods, _)) | None => {}
        }
        Ok(cfg.validated()?)
    }

    /// Copy with extra overrides appended.
    pub fn with_overrides(&self, extra: &[String]) -> Result<Self, CliError> {
        let mut out = self.clone();
        for item in extra {
            out.overrides.push(parse_override(item)?);
        }
        out.build(None)?;
        Ok(out)
    }
}

fn read_document(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Config(format!("{}: configuration must be a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

fn parse_override(item: &str) -> Result<(String, Value), CliError> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not of the form key=value")))?;
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((k.trim().to_string(), value))
}

fn as_count(v: f64) -> Result<usize, CliError> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(CliError::Config(format!("num-iods grid values must be positive integers, got {v}")))
    }
}

pub fn preset_of(p: PresetArg) -> Preset {
    match p {
        PresetArg::S1 => Preset::S1,
        PresetArg::S2 => Preset::S2,
        PresetArg::Equal10 => Preset::Equal10,
        PresetArg::Step7 => Preset::Step7,
    }
}
