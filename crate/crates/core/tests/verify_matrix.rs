use bilip::experiments::{run_verify, Scenario, TargetSpec, VerifyConfig};
use bilip::flows::FitOptions;

fn targets() -> Vec<TargetSpec> {
    vec![
        TargetSpec::DenseSpike { mass: 0.9, width: 0.1 },
        TargetSpec::SeparatedBimodal { dist: 2.0, width: 0.1 },
        TargetSpec::SeparatedBimodal { dist: 4.0, width: 0.3 },
        TargetSpec::Uniform { lo: -1.0, hi: 3.0 },
    ]
}

#[test]
fn certified_constants_stay_within_budget() {
    for scenario in [Scenario::Theorem1, Scenario::Theorem2, Scenario::Theorem3] {
        let cfg = VerifyConfig {
            targets: targets(),
            budgets: vec![(1.0, 1.0), (2.0, 1.5), (1.0, 20.0), (20.0, 1.0)],
            fit: FitOptions { steps: 30, ..FitOptions::default() },
            scenario,
        };
        let report = run_verify(&cfg).unwrap();
        assert_eq!(report.rows.len(), 16);
        assert_eq!(report.failures(), 0);
        for r in &report.rows {
            assert!(r.l1_certified <= r.l1_budget * (1.0 + 1e-12), "{r:?}");
            assert!(r.l2_certified <= r.l2_budget * (1.0 + 1e-12), "{r:?}");
            assert!((0.0..=1.0).contains(&r.measured_tv));
        }
    }
}

#[test]
fn loose_budgets_are_sound_and_accurate() {
    // The ball bounds go negative once L1 is large, so no cell can violate.
    for scenario in [Scenario::Theorem2, Scenario::Theorem3] {
        let cfg = VerifyConfig {
            targets: targets(),
            budgets: vec![(1e6, 1e6)],
            ..VerifyConfig::for_scenario(scenario)
        };
        let report = run_verify(&cfg).unwrap();
        assert_eq!(report.violations(), 0, "{}", report.to_csv());
        for r in &report.rows {
            assert!(r.measured_tv < 0.06, "{r:?}");
        }
    }
}

#[test]
fn rows_follow_config_order() {
    let cfg = VerifyConfig {
        targets: targets(),
        budgets: vec![(3.0, 1e6), (1.0, 1e6)],
        fit: FitOptions { steps: 5, ..FitOptions::default() },
        ..VerifyConfig::for_scenario(Scenario::Theorem2)
    };
    let report = run_verify(&cfg).unwrap();
    let order: Vec<(String, f64)> = report.rows.iter().map(|r| (r.target.clone(), r.l1_budget)).collect();
    let expected: Vec<(String, f64)> = targets()
        .iter()
        .flat_map(|t| [(t.to_string(), 3.0), (t.to_string(), 1.0)])
        .collect();
    assert_eq!(order, expected);
}
