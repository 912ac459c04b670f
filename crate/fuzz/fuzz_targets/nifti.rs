#![no_main]

use isoseg_core::volume::nifti;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(volume) = nifti::from_bytes(data) else { return };
    let bytes = nifti::to_bytes(&volume).expect("decoded volume re-encodes");
    let again = nifti::from_bytes(&bytes).expect("re-encoded volume decodes");
    assert_eq!(volume.dims(), again.dims());
    assert_eq!(volume.datatype(), again.datatype());
    assert_eq!(volume.payload(), again.payload());
});
