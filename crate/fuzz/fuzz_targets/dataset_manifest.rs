#![no_main]

use isoseg_core::pipeline::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DatasetManifest::parse(data) {
        DatasetManifest::parse(m.to_json().as_bytes()).expect("serialized manifest parses");
    }
});
