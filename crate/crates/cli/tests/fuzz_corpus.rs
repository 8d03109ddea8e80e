//! Replays the fuzz corpus seeds through the parsers and the field decoder.

use std::path::PathBuf;

use fluidex::spectral::FourierField;
use fluidex::SteadyFlow;
use fluidex_cli::config::{RunConfig, Settings};
use fluidex_cli::parse::{parse_class_list, parse_f64_list, parse_flow_spec};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn field_seeds_decode_as_expected() {
    for (name, bytes) in seeds("decode_field") {
        let decoded = FourierField::decode(&bytes);
        let should_fail = matches!(name.as_str(), "header_only" | "bad_dim");
        assert_eq!(decoded.is_err(), should_fail, "{name}");
        if let Ok(f) = decoded {
            assert_eq!(f.encode(), bytes, "{name}");
        }
    }
}

#[test]
fn config_seeds_resolve() {
    for (name, bytes) in seeds("parse_config") {
        let text = String::from_utf8(bytes).unwrap();
        let resolved = RunConfig::from_toml(&text).and_then(Settings::resolve);
        assert_eq!(resolved.is_err(), name == "unknown_key.toml", "{name}: {resolved:?}");
    }
}

#[test]
fn flow_spec_seeds_build_flows() {
    for (name, bytes) in seeds("parse_flow_spec") {
        let text = String::from_utf8(bytes).unwrap();
        let built = parse_flow_spec(&text).and_then(|(n, p)| SteadyFlow::from_name(&n, &p).map_err(|e| e.to_string()));
        assert_eq!(built.is_err(), name == "duplicate", "{name}: {built:?}");
    }
}

#[test]
fn list_seeds_parse() {
    for (name, bytes) in seeds("parse_cli_lists") {
        let text = String::from_utf8(bytes).unwrap();
        let numbers = parse_f64_list(&text);
        let classes = parse_class_list(&text);
        match name.as_str() {
            "horizons" | "fractions" => assert!(numbers.is_ok(), "{name}"),
            "classes2d" | "classes3d" => assert!(classes.is_ok(), "{name}"),
            "edge_values" => assert!(numbers.is_err()),
            other => panic!("unexpected seed {other}"),
        }
    }
}
