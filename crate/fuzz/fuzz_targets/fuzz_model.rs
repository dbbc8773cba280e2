//! The model-file reader must reject malformed documents with an error,
//! never a panic — it validates shapes and finiteness after serde.

#![no_main]

use libfuzzer_sys::fuzz_target;
use mbpep::ensemble::SavedModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = SavedModel::from_json(text);
    }
});
