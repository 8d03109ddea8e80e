use fluidex_cli::config::{RunConfig, Settings};
use fluidex_cli::parse::{parse_class_list, parse_f64_list, parse_flow_spec};
use proptest::prelude::*;

proptest! {
    #[test]
    fn float_lists_roundtrip(xs in proptest::collection::vec(-1e6f64..1e6, 1..8)) {
        let text = xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        prop_assert_eq!(parse_f64_list(&text).unwrap(), xs);
    }

    #[test]
    fn fractions_divide(p in -1000i32..1000, q in 1i32..1000) {
        let v = parse_f64_list(&format!("{p}/{q}")).unwrap();
        prop_assert_eq!(v, vec![p as f64 / q as f64]);
    }

    #[test]
    fn list_parsers_never_panic(s in ".{0,40}") {
        let _ = parse_f64_list(&s);
        let _ = parse_class_list(&s);
        let _ = parse_flow_spec(&s);
    }

    #[test]
    fn flow_specs_roundtrip(a in -10.0f64..10.0, b in 0.01f64..3.0) {
        let (name, params) = parse_flow_spec(&format!("bump_shear:amplitude={a:?},half_width={b:?}")).unwrap();
        prop_assert_eq!(name, "bump_shear");
        prop_assert_eq!(params["amplitude"], a);
        prop_assert_eq!(params["half_width"], b);
    }

    #[test]
    fn configs_never_panic(s in "[a-z_= \"0-9.\\[\\],\\n]{0,80}") {
        if let Ok(cfg) = RunConfig::from_toml(&s) {
            let _ = Settings::resolve(cfg);
        }
    }

    #[test]
    fn sample_counts_are_range_checked(n in 0usize..3_000_000) {
        let cfg = RunConfig::from_toml(&format!("command = \"exponents\"\nn_samples = {n}\n")).unwrap();
        prop_assert_eq!(Settings::resolve(cfg).is_ok(), (1..=1_000_000).contains(&n));
    }
}
