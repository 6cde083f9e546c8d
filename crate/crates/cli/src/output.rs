//! CSV artifacts and run manifests.
//!
//! Column order of every CSV is fixed; per-IoD columns are suffixed with the
//! 1-based IoD index and padded with empty fields when the IoD count varies
//! across a sweep.
//!
//! * `analysis.csv`: `point,rate_req,hap_power,num_iods`, then the analysis
//!   report columns (`policy,outage_total,outage_idle,throughput,fairness,
//!   fairness_raw,converged,iterations,residual,outage_i..,access_i..,rounds_i..`).
//! * `simulation.csv`: `point,rate_req,hap_power,num_iods,seed`, then the
//!   simulation report columns (`policy,mode,replications,blocks,outage_rate,
//!   outage_se,outage_se_batch,idle_rate,throughput,throughput_se,
//!   throughput_se_batch,fairness,fairness_raw,tx_i..,success_i..,access_i..,
//!   access_se_i..,gap_mean_i..,gap_se_i..`).
//! * `validation.csv`: see [`VALIDATION_HEADER`].
//! * `fairness_vs_ph.csv`: see [`SWEEP_PH_HEADER`].
//! * `trace.csv`: `block,selected,outcome,energy_i..`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use wpsched::SystemConfig;

use crate::error::CliError;

pub const POINT_COLUMNS: [&str; 4] = ["point", "rate_req", "hap_power", "num_iods"];

pub const VALIDATION_HEADER: [&str; 11] = [
    "point",
    "rate_req",
    "hap_power",
    "num_iods",
    "policy",
    "metric",
    "analysis",
    "simulation",
    "sigma",
    "z",
    "verdict",
];

pub const SWEEP_PH_HEADER: [&str; 9] =
    ["hap_power", "hap_power_dbm", "policy", "source", "fairness", "fairness_raw", "outage", "throughput", "converged"];

/// Empty for NaN, i.e. a metric that was not computed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    format!("{x:.12e}")
}

pub fn point_fields(index: usize, cfg: &SystemConfig) -> Vec<String> {
    vec![index.to_string(), num(cfg.rate_req), num(cfg.hap_power), cfg.num_iods().to_string()]
}

/// Output directory with the list of files written so far.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Writes rows under `header`, padding short rows with empty fields.
    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            let mut row = row.clone();
            row.resize(header.len(), String::new());
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.root.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing every output written before it.
    pub fn write_manifest(&mut self, command: &str, details: Value, base: &SystemConfig) -> Result<(), CliError> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let doc = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "core_version": wpsched::VERSION,
            "command": command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "created_unix": created,
            "config": base,
            "run": details,
            "outputs": self.written,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(self.root.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

pub fn header(fixed: &[&str], tail: Vec<String>) -> Vec<String> {
    fixed.iter().map(|s| s.to_string()).chain(tail).collect()
}

/// Applies `f` to every item on up to `workers` threads; results come back
/// in input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("result lock").into_iter().map(|r| r.expect("every item ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<u64> = (0..50).collect();
        for workers in [1, 3, 8] {
            assert_eq!(par_map(&items, workers, |&x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(par_map(&[] as &[u8], 4, |&x| x).is_empty());
    }
}
