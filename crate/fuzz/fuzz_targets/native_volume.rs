#![no_main]

use isoseg_core::volume::native;
use libfuzzer_sys::fuzz_target;

// Input is the header JSON, a zero byte, then the payload.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (header, payload) = (&data[..split], data.get(split + 1..).unwrap_or(&[]));
    if let Ok(volume) = native::from_parts(header, payload) {
        assert_eq!(volume.payload(), payload);
    }
});
