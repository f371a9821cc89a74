//! Fuzz the comma-separated number-list parser: no panics, and accepted
//! lists are non-empty with finite entries.

#![no_main]

use libfuzzer_sys::fuzz_target;
use lsi_stability::cli::parse_number_list;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(values) = parse_number_list(text) {
            assert!(!values.is_empty(), "accepted an empty list from {text:?}");
            assert!(
                values.iter().all(|v| v.is_finite()),
                "accepted a non-finite entry from {text:?}"
            );
        }
    }
});
