//! Fuzz the field-spec parser: it must never panic, and any accepted input
//! must round-trip through its canonical display form unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use lsi_stability::cli::parse_field_spec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_field_spec(text) {
            let canon = spec.to_string();
            let again = parse_field_spec(&canon).expect("canonical form must reparse");
            assert_eq!(spec, again, "round trip changed the spec for {text:?}");
            assert_eq!(canon, again.to_string(), "display is not a fixed point");
        }
    }
});
