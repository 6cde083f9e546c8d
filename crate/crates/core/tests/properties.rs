mod common;

use proptest::prelude::*;
use wpsched::{ChainModel, PolicyKind, SystemConfig};

fn config(distances: Vec<f64>, k: usize, m: usize, log_ph: f64) -> SystemConfig {
    let mut cfg = SystemConfig::with_distances(distances);
    cfg.num_levels = k;
    cfg.max_wait = m;
    cfg.hap_power = 10f64.powf(log_ph);
    cfg
}

fn arb_config() -> impl Strategy<Value = SystemConfig> {
    (prop::collection::vec(3.0..15.0f64, 1..4), 1usize..12, 1usize..6, -3.0..1.5f64)
        .prop_map(|(d, k, m, ph)| config(d, k, m, ph))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_chains_are_stochastic_with_no_forbidden_mass(
        cfg in arb_config(),
        fair in any::<bool>(),
        seed in prop::collection::vec(0.0..1.0f64, 64),
    ) {
        let policy = if fair { PolicyKind::FairnessOriented } else { PolicyKind::ThroughputOriented };
        let model = ChainModel::new(&cfg, policy).unwrap();
        let n = model.num_states();
        // Random distributions for every IoD drive a realistic profile.
        let pis: Vec<Vec<f64>> = (0..cfg.num_iods())
            .map(|i| {
                let raw: Vec<f64> = (0..n).map(|s| seed[(s * 7 + i * 13) % seed.len()] + 1e-3).collect();
                let t: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / t).collect()
            })
            .collect();
        let profile = model.profile(&pis).unwrap();
        for i in 0..cfg.num_iods() {
            for (s, &u) in profile.row(i).iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&u));
                if model.level_of(s) == 0 {
                    prop_assert_eq!(u, 0.0);
                }
            }
            let z = model.matrix(i, profile.row(i)).unwrap();
            let (defect, forbidden) = common::chain_violations(&z, fair, cfg.max_wait);
            prop_assert!(defect <= 1e-12, "row defect {}", defect);
            prop_assert_eq!(forbidden, 0.0);
            let next = model.step(i, profile.row(i), &pis[i]);
            prop_assert!((next.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn point_masses_give_one_winner_or_none(cfg in arb_config(), fair in any::<bool>()) {
        // Under point-mass distributions exactly one IoD (or none) wins.
        let policy = if fair { PolicyKind::FairnessOriented } else { PolicyKind::ThroughputOriented };
        let model = ChainModel::new(&cfg, policy).unwrap();
        let n = model.num_states();
        let states: Vec<usize> = (0..cfg.num_iods()).map(|i| (i * 5 + 3) % n).collect();
        let pis: Vec<Vec<f64>> = states.iter().map(|&s| { let mut v = vec![0.0; n]; v[s] = 1.0; v }).collect();
        let profile = model.profile(&pis).unwrap();
        let total: f64 = states.iter().enumerate().map(|(i, &s)| profile.row(i)[s]).sum();
        let any_energy = states.iter().any(|&s| model.level_of(s) > 0);
        prop_assert_eq!(total, if any_energy { 1.0 } else { 0.0 });
    }
}
