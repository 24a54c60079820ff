#![no_main]

use fep_core::ingest::SourceBundle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(b) = SourceBundle::from_json(text) {
        let again = SourceBundle::from_json(&b.to_json()).expect("re-encoded bundle decodes");
        assert_eq!(again, b);
    }
});
