use std::collections::BTreeMap;

use fluidex::exponent::{ress_lower_bound, theta_sup, ClassRequest, EstimatorConfig};
use fluidex::{composite_report, estimate_exponent, sample_admissible, ClassTag, SteadyFlow};
use proptest::prelude::*;

fn flow_and_class() -> impl Strategy<Value = (&'static str, ClassTag)> {
    prop_oneof![
        Just(("cellular", ClassTag::Full)),
        Just(("cellular", ClassTag::Star2)),
        Just(("cellular", ClassTag::F2Aligned)),
        Just(("cellular", ClassTag::F2Complement)),
        Just(("shear", ClassTag::Star2)),
        Just(("abc", ClassTag::Star3)),
        Just(("abc", ClassTag::Full)),
        Just(("bump_shear", ClassTag::Star3)),
        Just(("bump_shear", ClassTag::F3)),
        Just(("lift_cellular", ClassTag::Full)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn samples_are_admissible_and_tagged((name, class) in flow_and_class(), n in 1usize..40, seed in any::<u64>()) {
        let flow = SteadyFlow::from_name(name, &BTreeMap::new()).unwrap();
        let set = sample_admissible(&flow, class, n, seed).unwrap();
        prop_assert!(set.sampled <= n);
        for s in &set.samples {
            prop_assert!(s.is_admissible(1e-12), "{s:?}");
            prop_assert_eq!(s.class_tag, class);
            for a in flow.dim()..3 {
                prop_assert_eq!(s.x0[a], 0.0);
                prop_assert_eq!(s.xi0[a], 0.0);
            }
            if class == ClassTag::F2Aligned {
                let g = flow.vorticity_gradient(&s.x0).unwrap();
                prop_assert!(s.b0.dot(&g).abs() <= 1e-12 * (1.0 + g.norm()));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic((name, class) in flow_and_class(), seed in any::<u64>()) {
        let flow = SteadyFlow::from_name(name, &BTreeMap::new()).unwrap();
        prop_assert_eq!(sample_admissible(&flow, class, 12, seed).unwrap(), sample_admissible(&flow, class, 12, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn theta_is_scale_invariant(seed in 0u64..10_000) {
        let flow = SteadyFlow::cellular();
        let set = sample_admissible(&flow, ClassTag::Full, 8, seed).unwrap();
        let doubled: Vec<_> = set.samples.iter().cloned().map(|mut s| { s.xi0 *= 2.0; s }).collect();
        let a = theta_sup(&flow, 4.0, &set.samples, 1e-3).unwrap();
        let b = theta_sup(&flow, 4.0, &doubled, 1e-3).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn theta_grows_with_the_sample_set(seed in 0u64..10_000) {
        let flow = SteadyFlow::cellular();
        let small = sample_admissible(&flow, ClassTag::Star2, 10, seed).unwrap();
        let large = sample_admissible(&flow, ClassTag::Star2, 30, seed).unwrap();
        for s in &small.samples {
            prop_assert!(large.samples.contains(s));
        }
        let a = theta_sup(&flow, 3.0, &small.samples, 1e-2).unwrap();
        let b = theta_sup(&flow, 3.0, &large.samples, 1e-2).unwrap();
        prop_assert!(b >= a);
    }
}

#[test]
fn estimates_are_bit_identical() {
    let flow = SteadyFlow::cellular();
    let a = estimate_exponent(&flow, ClassTag::Star2, &[2.0, 4.0, 6.0], 30, 5, 1e-2).unwrap();
    let b = estimate_exponent(&flow, ClassTag::Star2, &[2.0, 4.0, 6.0], 30, 5, 1e-2).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for t in [0.5, 1.0, 7.0] {
        assert_eq!(ress_lower_bound(&a, t).unwrap(), (a.mu_hat * t).exp());
    }
}

#[test]
fn full_theta_is_the_max_over_covering_classes() {
    for name in ["cellular", "bump_shear"] {
        let flow = SteadyFlow::from_name(name, &BTreeMap::new()).unwrap();
        let config = EstimatorConfig {
            classes: vec![ClassRequest::Tag(ClassTag::Full)],
            horizons: vec![2.0, 4.0, 6.0],
            n: 40,
            seed: 3,
            step: 1e-2,
            bound_times: vec![1.0],
        };
        let report = composite_report(&flow, &config).unwrap();
        let rel = report.max_relation.expect("max relation");
        assert!(rel.theta_gap <= 1e-9, "{name}: {}", rel.theta_gap);
        assert!(rel.holds);
    }
}

#[test]
fn constant_flow_has_zero_exponent() {
    let flow = SteadyFlow::constant(&[1.0, 2.0]);
    let e = estimate_exponent(&flow, ClassTag::Full, &[5.0, 10.0], 20, 1, 1e-2).unwrap();
    assert!(e.mu_hat.abs() <= 1e-9);
    assert!(e.theta_log.iter().all(|v| v.abs() <= 1e-12));
}
