#![no_main]

use fep_core::ingest::SyntheticSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = SyntheticSpec::from_toml(text) {
        let _ = SyntheticSpec::from_toml(&spec.to_toml()).expect("re-encoded spec parses");
    }
});
