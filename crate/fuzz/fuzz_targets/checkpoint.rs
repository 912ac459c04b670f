#![no_main]

use isoseg_core::net::checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(net) = checkpoint::from_bytes(data) else { return };
    let bytes = checkpoint::to_bytes(&net);
    let again = checkpoint::from_bytes(&bytes).expect("re-encoded checkpoint decodes");
    assert_eq!(checkpoint::to_bytes(&again), bytes);
});
