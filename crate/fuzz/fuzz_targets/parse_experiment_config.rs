#![no_main]

use fep_core::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        let _ = cfg.gate_grid();
        let _ = ExperimentConfig::from_toml(&cfg.to_toml()).expect("re-encoded config parses");
    }
});
