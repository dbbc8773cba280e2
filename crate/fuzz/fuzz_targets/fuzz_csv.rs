//! The CSV parser must return an error, never panic, on arbitrary input.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mbpep::data::{parse_csv, TargetColumn};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // alternate target selection off the input so both paths get fuzzed
        let target = if data.len() % 2 == 0 {
            TargetColumn::Last
        } else {
            TargetColumn::Named("y".into())
        };
        let _ = parse_csv(text, &target);
    }
});
