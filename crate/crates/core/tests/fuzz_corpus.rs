//! Replays the checked-in fuzz corpus: every seed decodes, and truncated or
//! bit-flipped seeds are rejected without panicking.

use std::path::PathBuf;

use isoseg_core::ensemble::{SplitManifest, SuggestionExport};
use isoseg_core::net::checkpoint;
use isoseg_core::pipeline::DatasetManifest;
use isoseg_core::volume::{native, nifti};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Prefixes and single-bit flips of `bytes`, thinned for long inputs.
fn mutants(bytes: &[u8]) -> Vec<Vec<u8>> {
    let step = (bytes.len() / 400).max(1);
    let mut out = Vec::new();
    for cut in (0..bytes.len()).step_by(step) {
        out.push(bytes[..cut].to_vec());
    }
    for i in (0..bytes.len()).step_by(step) {
        for bit in [0, 3, 7] {
            let mut m = bytes.to_vec();
            m[i] ^= 1 << bit;
            out.push(m);
        }
    }
    out
}

fn native_parts(data: &[u8]) -> (&[u8], &[u8]) {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    (&data[..split], data.get(split + 1..).unwrap_or(&[]))
}

#[test]
fn nifti_seeds() {
    for (name, bytes) in seeds("nifti") {
        let v = nifti::from_bytes(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(nifti::to_bytes(&v).unwrap(), bytes, "{name}");
        for m in mutants(&bytes) {
            let _ = nifti::from_bytes(&m);
        }
    }
}

#[test]
fn native_volume_seeds() {
    for (name, bytes) in seeds("native_volume") {
        let (header, payload) = native_parts(&bytes);
        native::from_parts(header, payload).unwrap_or_else(|e| panic!("{name}: {e}"));
        for m in mutants(&bytes) {
            let (header, payload) = native_parts(&m);
            let _ = native::from_parts(header, payload);
        }
    }
}

#[test]
fn checkpoint_seeds() {
    for (name, bytes) in seeds("checkpoint") {
        let net = checkpoint::from_bytes(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(checkpoint::to_bytes(&net), bytes, "{name}");
        for m in mutants(&bytes) {
            let _ = checkpoint::from_bytes(&m);
        }
    }
}

#[test]
fn manifest_seeds() {
    for (name, bytes) in seeds("dataset_manifest") {
        DatasetManifest::parse(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        mutants(&bytes).iter().for_each(|m| drop(DatasetManifest::parse(m)));
    }
    for (name, bytes) in seeds("split_manifest") {
        SplitManifest::parse(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        mutants(&bytes).iter().for_each(|m| drop(SplitManifest::parse(m)));
    }
    for (name, bytes) in seeds("suggestion_export") {
        SuggestionExport::parse(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        mutants(&bytes).iter().for_each(|m| drop(SuggestionExport::parse(m)));
    }
}
