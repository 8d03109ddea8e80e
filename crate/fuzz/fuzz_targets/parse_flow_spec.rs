#![no_main]

use fluidex::SteadyFlow;
use fluidex_cli::parse::parse_flow_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((name, params)) = parse_flow_spec(text) {
            let _ = SteadyFlow::from_name(&name, &params);
        }
    }
});
