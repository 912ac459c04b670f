#![no_main]

use isoseg_cli::case::CaseManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = CaseManifest::parse(data);
});
