mod common;

use rand::seq::SliceRandom;
use rmw::combo::{bvn_upper, ComboSpec};
use rmw::dataset::build_risk_table;
use rmw::harness::{self, MethodSpec};
use rmw::simulator::{builtin_scenario, builtin_scenarios, simulate_trial};
use rmw::wlrt::weighted_logrank;
use rmw::{normal, WeightSpec};

#[test]
fn logrank_matches_textbook_on_random_data() {
    let mut rng = common::rng(101);
    for _ in 0..300 {
        let records = common::random_dataset(&mut rng, 40);
        let Some(expected) = common::textbook_logrank_z(&records) else { continue };
        let table = build_risk_table(&records).unwrap();
        let z = weighted_logrank(&WeightSpec::Constant, &table).unwrap().z;
        assert!((z - expected).abs() < 1e-12, "{z} vs {expected}");
    }
}

#[test]
fn permutation_null_z_is_standard() {
    let mut scenario = builtin_scenario("high_equal").unwrap();
    scenario.n_total = 300;
    let mut records = simulate_trial(&scenario, 77).unwrap();
    assert!(records.iter().filter(|r| r.event).count() >= 100);
    let mut arms: Vec<_> = records.iter().map(|r| r.arm).collect();
    let mut rng = common::rng(3);
    for spec in [WeightSpec::Constant, WeightSpec::Modest { s_star: 0.5 }, WeightSpec::FlemingHarrington { rho: 0.0, gamma: 0.5 }] {
        let zs: Vec<f64> = (0..2000)
            .map(|_| {
                arms.shuffle(&mut rng);
                for (r, &a) in records.iter_mut().zip(&arms) {
                    r.arm = a;
                }
                weighted_logrank(&spec, &build_risk_table(&records).unwrap()).unwrap().z
            })
            .collect();
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * (var / n).sqrt(), "{spec}: mean {mean}");
        assert!((0.8..=1.2).contains(&var), "{spec}: variance {var}");
    }
}

#[test]
fn bvn_reconstructs_marginals() {
    for &a in &[-3.0, -1.0, 0.0, 0.7, 2.0, 5.0] {
        for &rho in &[-0.9, -0.3, 0.0, 0.5, 0.97, 1.0] {
            let m = bvn_upper(a, f64::NEG_INFINITY, rho).unwrap();
            assert!((m - normal::sf(a)).abs() < 1e-10);
            // P(X > a) = P(X > a, Y > b) + P(X > a, Y <= b), the latter with -Y.
            let b = 0.4;
            let split = bvn_upper(a, b, rho).unwrap() + bvn_upper(a, -b, -rho).unwrap();
            assert!((split - normal::sf(a)).abs() < 1e-12, "a={a} rho={rho}");
        }
    }
}

#[test]
fn bvn_matches_two_dimensional_quadrature_off_grid() {
    let mut rng = common::rng(5);
    use rand::Rng;
    for _ in 0..20 {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(-3.0..3.0);
        let rho = rng.random_range(-0.98..0.98);
        let got = bvn_upper(a, b, rho).unwrap();
        let want = common::bvn_upper_oracle(a, b, rho);
        assert!((got - want).abs() < 1e-8, "({a}, {b}, {rho}): {got} vs {want}");
    }
}

/// rMW(k1=0.6) sits between LR and rMW(k1=0.5) up to Monte Carlo noise.
#[test]
fn k1_interpolates_between_logrank_and_equal_split() {
    let lr = WeightSpec::Constant;
    let mw = WeightSpec::Modest { s_star: 0.5 };
    let methods = vec![
        MethodSpec::new("LR", ComboSpec::single(lr, 0.025).unwrap()),
        MethodSpec::new("rMW(k1=0.5)", ComboSpec::new(lr, mw, 0.5, 0.025).unwrap()),
        MethodSpec::new("rMW(k1=0.6)", ComboSpec::new(lr, mw, 0.6, 0.025).unwrap()),
    ];
    for s in builtin_scenarios() {
        let oc = harness::estimate_power(&s, &methods, 1000, 21).unwrap();
        let rate = |l: &str| oc.method(l).unwrap();
        let (a, b, mid) = (rate("LR"), rate("rMW(k1=0.5)"), rate("rMW(k1=0.6)"));
        let slack = 2.0 * mid.mc_standard_error.max(1.0 / 1000.0);
        let (lo, hi) = if a.rejection_rate <= b.rejection_rate { (a, b) } else { (b, a) };
        assert!(
            mid.rejection_rate >= lo.rejection_rate - slack && mid.rejection_rate <= hi.rejection_rate + slack,
            "{}: LR {} rMW(0.5) {} rMW(0.6) {}",
            s.name,
            a.rejection_rate,
            b.rejection_rate,
            mid.rejection_rate
        );
    }
}

#[test]
fn equal_survival_controls_type_one_error() {
    let s = builtin_scenario("high_equal").unwrap();
    let oc = harness::estimate_power(&s, &harness::paper_methods(0.025).unwrap(), 2000, 13).unwrap();
    for m in &oc.methods {
        assert!(m.rejection_rate <= 0.025 + 3.0 * m.mc_standard_error.max(0.0035), "{}: {}", m.label, m.rejection_rate);
    }
}
