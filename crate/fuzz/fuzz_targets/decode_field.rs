#![no_main]

use fluidex::spectral::FourierField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = FourierField::decode(data) {
        assert_eq!(f.encode(), data);
    }
});
