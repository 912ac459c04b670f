#![no_main]

use isoseg_core::ensemble::SuggestionExport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(e) = SuggestionExport::parse(data) {
        SuggestionExport::parse(e.to_json().as_bytes()).expect("serialized export parses");
    }
});
