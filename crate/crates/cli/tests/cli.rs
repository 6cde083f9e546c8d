use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wpsched(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpsched")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn cols(fixed: &str, per_iod: &[&str], l: usize) -> Vec<String> {
    let mut v: Vec<String> = fixed.split(',').map(String::from).collect();
    for p in per_iod {
        v.extend((1..=l).map(|i| format!("{p}_{i}")));
    }
    v
}

fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    &row[header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))]
}

#[test]
fn analyze_columns_are_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(&["analyze", "--preset", "s1", "--scaled", "--sweep", "rate", "--grid", "0.5,1,2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("analysis.csv"));
    let expected = cols(
        "point,rate_req,hap_power,num_iods,policy,outage_total,outage_idle,throughput,fairness,fairness_raw,converged,iterations,residual",
        &["outage", "access", "rounds"],
        3,
    );
    assert_eq!(header, expected);
    assert_eq!(rows.len(), 6);
    let policies: Vec<&str> = rows.iter().map(|r| field(&header, r, "policy")).collect();
    assert_eq!(policies, ["throughput", "fairness"].repeat(3));
    for r in &rows {
        assert_eq!(field(&header, r, "converged"), "true");
    }
    // Output rows follow the grid.
    let rates: Vec<f64> = rows.iter().map(|r| field(&header, r, "rate_req").parse().unwrap()).collect();
    assert_eq!(rates, [0.5, 0.5, 1.0, 1.0, 2.0, 2.0]);
}

#[test]
fn analyze_is_deterministic_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["analyze", "--scaled", "--sweep", "hap-power", "--grid", "0.01,0.1"];
    assert_eq!(code(&wpsched(&[&args[..], &["--workers", "1"]].concat(), a.path())), 0);
    assert_eq!(code(&wpsched(&[&args[..], &["--workers", "3"]].concat(), b.path())), 0);
    let read = |d: &Path| std::fs::read_to_string(d.join("analysis.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn num_iods_sweep_pads_per_iod_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        wpsched(&["analyze", "--scaled", "--policy", "throughput", "--sweep", "num-iods", "--grid", "1,2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("analysis.csv"));
    assert!(header.contains(&"access_2".to_string()) && !header.contains(&"access_3".to_string()));
    assert_eq!(field(&header, &rows[0], "access_2"), "");
    assert_ne!(field(&header, &rows[1], "access_2"), "");
}

#[test]
fn simulate_columns_are_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(&["simulate", "--scaled", "--blocks", "20000", "--replications", "2", "--seed", "7"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("simulation.csv"));
    let expected = cols(
        "point,rate_req,hap_power,num_iods,seed,policy,mode,replications,blocks,outage_rate,outage_se,outage_se_batch,\
         idle_rate,throughput,throughput_se,throughput_se_batch,fairness,fairness_raw",
        &["tx", "success", "access", "access_se", "gap_mean", "gap_se"],
        3,
    );
    assert_eq!(header, expected);
    let policies: Vec<&str> = rows.iter().map(|r| field(&header, r, "policy")).collect();
    assert_eq!(policies, ["throughput", "fairness", "rr", "rs"]);
    for r in &rows {
        assert_eq!(field(&header, r, "blocks"), "40000");
        assert_eq!(field(&header, r, "seed"), "7");
        assert_eq!(field(&header, r, "mode"), "discretized");
    }
}

#[test]
fn manifest_echoes_config_seed_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(
        &[
            "simulate",
            "--scaled",
            "--policy",
            "rr",
            "--blocks",
            "1000",
            "--seed",
            "99",
            "--set",
            "rate_req=1.25",
            "--rr-skip-empty",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["run"]["simulation"]["seed"], 99);
    assert_eq!(m["run"]["simulation"]["rr_skip_empty"], true);
    assert_eq!(m["config"]["rate_req"], 1.25);
    assert_eq!(m["config"]["num_levels"], 50);
    assert!(m["tool_version"].is_string() && m["core_version"].is_string());
    assert_eq!(m["outputs"], serde_json::json!(["simulation.csv"]));
}

#[test]
fn config_document_and_overrides_stack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"preset": "s2", "num_iods": 2, "num_levels": 20, "max_wait": 5, "rate_req": 3}"#).unwrap();
    let o = wpsched(&["analyze", "--config", cfg.to_str().unwrap(), "--set", "rate_req=1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["distances"], serde_json::json!([5.0, 9.0]));
    assert_eq!(m["config"]["num_levels"], 20);
    assert_eq!(m["config"]["rate_req"], 1.0);
}

#[test]
fn single_iod_validation_passes_with_positive_sigma() {
    // One IoD has no competitors, so the analysis is exact.
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "validate",
        "--scaled",
        "--num-iods",
        "1",
        "--set",
        "hap_power=0.1",
        "--blocks",
        "200000",
        "--replications",
        "2",
        "--seed",
        "3",
    ];
    let o = wpsched(&args, dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    let (header, rows) = read_csv(&dir.path().join("validation.csv"));
    assert_eq!(
        header,
        cols("point,rate_req,hap_power,num_iods,policy,metric,analysis,simulation,sigma,z,verdict", &[], 0)
    );
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(field(&header, r, "sigma").parse::<f64>().unwrap() > 0.0);
        assert_eq!(field(&header, r, "verdict"), "PASS");
    }
    for f in ["analysis.csv", "simulation.csv", "validation.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn mismatched_levels_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "validate",
        "--scaled",
        "--num-iods",
        "1",
        "--set",
        "hap_power=0.1",
        "--blocks",
        "200000",
        "--seed",
        "3",
        "--sim-set",
        "num_levels=5",
    ];
    let o = wpsched(&args, dir.path());
    assert_eq!(code(&o), 1);
    let (header, rows) = read_csv(&dir.path().join("validation.csv"));
    assert!(rows.iter().any(|r| field(&header, r, "verdict") == "FAIL"));
}

#[test]
fn non_convergence_flags_rows_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(&["analyze", "--scaled", "--solver", "plain", "--max-iterations", "2"], dir.path());
    assert_eq!(code(&o), 3);
    let (header, rows) = read_csv(&dir.path().join("analysis.csv"));
    assert!(rows.iter().all(|r| field(&header, r, "converged") == "false"));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 7] = [
        &["analyze", "--sweep", "rate", "--grid", ""],
        &["analyze", "--sweep", "rate", "--grid", "2,1"],
        &["analyze", "--policy", "rr"],
        &["analyze", "--set", "bogus=1"],
        &["simulate", "--set", "num_levels=0"],
        &["analyze", "--preset", "s9"],
        &["trace", "--policy", "rr,rs", "--blocks", "10"],
    ];
    for args in cases {
        assert_eq!(code(&wpsched(args, dir.path())), 2, "{args:?}");
    }
}

#[test]
fn sweep_ph_writes_both_sources() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(&["sweep-ph", "--scaled", "--grid", "0.01,0.1", "--blocks", "20000"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("fairness_vs_ph.csv"));
    assert_eq!(
        header,
        cols("hap_power,hap_power_dbm,policy,source,fairness,fairness_raw,outage,throughput,converged", &[], 0)
    );
    // Two analyzable policies plus four simulated ones per power.
    assert_eq!(rows.len(), 12);
    let analytic = rows.iter().filter(|r| r[3] == "analysis").count();
    assert_eq!(analytic, 4);
    assert!((field(&header, &rows[0], "hap_power_dbm").parse::<f64>().unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn trace_has_one_row_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpsched(&["trace", "--scaled", "--policy", "fairness", "--blocks", "100"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, cols("block,selected,outcome", &["energy"], 3));
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| ["idle", "delivered", "outage"].contains(&r[2].as_str())));
}
