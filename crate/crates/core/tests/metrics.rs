use wpsched::{
    access_probabilities, analyze, analyze_with, fairness_index, fairness_index_raw, run, BatteryMode, PolicyKind,
    Preset, SolverOptions, SystemConfig, ToleranceConfig,
};

fn scaled(preset: Preset) -> SystemConfig {
    SystemConfig::preset(preset, None).unwrap().scaled()
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

#[test]
fn vanishing_power_means_certain_outage() {
    for policy in [PolicyKind::ThroughputOriented, PolicyKind::FairnessOriented] {
        let mut cfg = scaled(Preset::S1);
        cfg.hap_power = 1e-5;
        let rep = analyze(&cfg, policy, &tol()).unwrap();
        assert!(rep.outage_total > 1.0 - 1e-6, "{policy}: {}", rep.outage_total);
        assert!(rep.outage_idle > 1.0 - 1e-6);
    }
}

#[test]
fn vanishing_rate_means_no_link_outage() {
    for policy in [PolicyKind::ThroughputOriented, PolicyKind::FairnessOriented] {
        let mut cfg = scaled(Preset::S1);
        cfg.hap_power = 0.05;
        cfg.rate_req = 1e-6;
        let rep = analyze(&cfg, policy, &tol()).unwrap();
        assert!(rep.outage_per_iod.iter().sum::<f64>() < 1e-6, "{policy}: {:?}", rep.outage_per_iod);
        assert!((rep.outage_total - rep.outage_idle).abs() < 1e-6);
    }
}

#[test]
fn outage_and_throughput_decompose() {
    for policy in [PolicyKind::ThroughputOriented, PolicyKind::FairnessOriented] {
        let mut cfg = scaled(Preset::S2);
        cfg.hap_power = 0.05;
        let rep = analyze(&cfg, policy, &tol()).unwrap();
        let sum = rep.outage_idle + rep.outage_per_iod.iter().sum::<f64>();
        assert!((rep.outage_total - sum).abs() < 1e-14);
        assert!((rep.throughput - cfg.rate_req * (1.0 - rep.outage_total)).abs() < 1e-14);
        // Every block is idle, a delivery, or a failed transmission.
        let access: f64 = rep.access_probs.iter().sum();
        assert!((access + rep.outage_idle - 1.0).abs() < 1e-8, "{policy}: {access} + {}", rep.outage_idle);
    }
}

#[test]
fn single_iod_access_is_non_empty_mass() {
    let cfg = SystemConfig::preset(Preset::S1, Some(1)).unwrap();
    let rep =
        analyze_with(&cfg, PolicyKind::ThroughputOriented, &SolverOptions { relaxation: 0.5, ..Default::default() })
            .unwrap();
    assert!((rep.access_probs[0] - (1.0 - rep.outage_idle)).abs() < 1e-12);
}

#[test]
fn single_iod_analysis_agrees_with_simulation() {
    // Without competitors the chain is exact, so outage, access and the mean
    // charging gap all match the simulator.
    let mut cfg = SystemConfig::preset(Preset::S2, Some(1)).unwrap().scaled();
    cfg.distances = vec![11.0];
    cfg.hap_power = 0.1;
    let rep =
        analyze_with(&cfg, PolicyKind::ThroughputOriented, &SolverOptions { relaxation: 0.5, ..Default::default() })
            .unwrap();
    let sim = run(&cfg, PolicyKind::ThroughputOriented, 2_000_000, BatteryMode::Discretized, 5).unwrap();
    let out_se = sim.outage_se().max(sim.outage_se_batch());
    assert!(
        (rep.outage_total - sim.outage_rate()).abs() <= 3.0 * out_se,
        "{} vs {}",
        rep.outage_total,
        sim.outage_rate()
    );
    let acc_se = sim.access_se()[0].max(sim.access_se_batch()[0]);
    assert!((rep.access_probs[0] - sim.access_rates()[0]).abs() <= 3.0 * acc_se);
    let gap = sim.mean_gaps()[0];
    assert!(
        (rep.charging_rounds[0] - gap).abs() <= 3.0 * sim.gap_se()[0],
        "{} vs {gap} (se {})",
        rep.charging_rounds[0],
        sim.gap_se()[0]
    );
}

#[test]
fn nearer_iods_get_more_access_under_throughput_policy() {
    let mut cfg = SystemConfig::preset(Preset::S1, None).unwrap();
    cfg.hap_power = 0.1;
    let opts = SolverOptions { accelerated: true, ..Default::default() };
    let rep = analyze_with(&cfg, PolicyKind::ThroughputOriented, &opts).unwrap();
    for w in rep.access_probs.windows(2) {
        assert!(w[0] >= w[1], "{:?}", rep.access_probs);
    }
}

#[test]
fn relabelling_iods_permutes_the_throughput_report() {
    // Fairness ratios tie far more often (any capped pair is level/K against
    // level/K), so only the throughput policy is label-symmetric.
    let perm = [3usize, 0, 4, 2, 1];
    let policy = PolicyKind::ThroughputOriented;
    let mut cfg = scaled(Preset::S2);
    // With d = 10 and 12 the gains are 1/1001 and 1/1729 = (11/19)/1001,
    // so levels 11 and 19 tie and the index rule would break the symmetry.
    // These distances admit no tie below 50 levels.
    cfg.distances = vec![5.0, 8.0, 9.0, 11.0, 12.0];
    cfg.hap_power = 0.05;
    // Plain iteration creeps here (thousands of sweeps), so its stopping
    // error exceeds the comparison tolerance; the exact inner solve does not.
    let opts = SolverOptions { accelerated: true, ..Default::default() };
    let base = analyze_with(&cfg, policy, &opts).unwrap();
    let mut shuffled = cfg.clone();
    shuffled.distances = perm.iter().map(|&p| cfg.distances[p]).collect();
    let rep = analyze_with(&shuffled, policy, &opts).unwrap();
    assert!((base.outage_total - rep.outage_total).abs() < 1e-8, "{} {}", base.outage_total, rep.outage_total);
    for (j, &p) in perm.iter().enumerate() {
        assert!((base.access_probs[p] - rep.access_probs[j]).abs() < 1e-8, "IoD {j}");
    }
}

#[test]
fn fairness_index_examples() {
    assert_eq!(fairness_index(&[0.2; 5]), 1.0);
    assert_eq!(fairness_index(&[0.1; 5]), 1.0);
    assert_eq!(fairness_index(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0.0);
    assert_eq!(fairness_index(&[0.0; 5]), 0.0);
    let f = fairness_index(&[0.5, 0.5, 0.0, 0.0, 0.0]);
    assert!((f - 2f64.ln() / 5f64.ln()).abs() < 1e-12);
    // Unequal shares, entropy computed by hand: shares 0.5, 0.3, 0.2.
    let h = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln());
    assert!((fairness_index(&[0.25, 0.15, 0.1]) - h / 3f64.ln()).abs() < 1e-14);
    // The raw form keeps the scale of the inputs.
    let raw = fairness_index_raw(&[0.25, 0.15, 0.1]);
    let h_raw = -(0.25f64 * 0.25f64.ln() + 0.15 * 0.15f64.ln() + 0.1 * 0.1f64.ln());
    assert!((raw - h_raw / 3f64.ln()).abs() < 1e-14);
}

#[test]
fn baseline_access_is_the_slot_share() {
    for policy in [PolicyKind::RoundRobin, PolicyKind::RandomSelection] {
        let rho: Vec<f64> = access_probabilities(policy, None, None, 4).unwrap();
        assert_eq!(rho, vec![0.25; 4]);
    }
    assert!(access_probabilities::<f64>(PolicyKind::ThroughputOriented, None, None, 4).is_err());
}
