#![no_main]

use fep_core::learner::BoostedEnsemble;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = BoostedEnsemble::from_json(text) {
        let row = vec![0.0; m.feature_names.len()];
        let _ = m.raw_score(&row);
        let _ = BoostedEnsemble::from_json(&m.to_json()).expect("re-encoded model decodes");
    }
});
