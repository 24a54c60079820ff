#![no_main]

use fep_core::ingest::oulad::parse_table_bytes;
use fep_core::ingest::{LoadOptions, TableKind};
use libfuzzer_sys::fuzz_target;

// First byte picks the table; the rest is the CSV body.
fuzz_target!(|data: &[u8]| {
    let Some((&k, body)) = data.split_first() else {
        return;
    };
    let kind = TableKind::ALL[k as usize % TableKind::ALL.len()];
    let _ = parse_table_bytes(kind, body, &LoadOptions::default());
});
