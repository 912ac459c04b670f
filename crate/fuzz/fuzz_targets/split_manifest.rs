#![no_main]

use isoseg_core::ensemble::SplitManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = SplitManifest::parse(data) {
        SplitManifest::parse(m.to_json().as_bytes()).expect("serialized splits parse");
    }
});
