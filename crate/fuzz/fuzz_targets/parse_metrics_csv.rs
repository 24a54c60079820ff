#![no_main]

use fep_core::metrics::{metrics_csv, parse_metrics_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_metrics_csv(text) {
        let _ = parse_metrics_csv(&metrics_csv(&m));
    }
});
