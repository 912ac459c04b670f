//! Regenerates the fuzz corpus seeds. Run from the workspace root:
//! `cargo run -p isoseg-core --example fuzz_seeds`.

use std::fs;
use std::path::Path;

use isoseg_core::ensemble::{draw_splits, suggest_corrections, EnsembleConfig, SuggestionExport};
use isoseg_core::net::{checkpoint, Mode, Network, NetworkConfig};
use isoseg_core::autodiff::Tensor;
use isoseg_core::pipeline::{DatasetManifest, Split, SubjectEntry};
use isoseg_core::volume::{native, nifti, AnyVolume, Volume};

fn put(target: &str, name: &str, bytes: &[u8]) {
    let dir = Path::new("fuzz/corpus").join(target);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(name), bytes).unwrap();
}

fn main() {
    let dims = [3, 2, 2];
    let vols: [(&str, AnyVolume); 3] = [
        ("u8", Volume::new(dims, [1.0, 1.0, 2.0], (0..12).map(|i| (i % 4) as u8).collect()).unwrap().into()),
        ("i16", Volume::new(dims, [0.5; 3], (0..12).map(|i| i as i16 * -300).collect()).unwrap().into()),
        ("f32", Volume::new(dims, [1.0; 3], (0..12).map(|i| i as f32 * 0.25 - 1.0).collect()).unwrap().into()),
    ];
    for (name, v) in &vols {
        put("nifti", &format!("{name}.nii"), &nifti::to_bytes(v).unwrap());
        let mut json = serde_json::to_vec(&native::header_for(v, "v.vraw")).unwrap();
        json.push(0);
        json.extend(v.payload());
        put("native_volume", &format!("{name}.bin"), &json);
    }

    for (name, cfg) in [("early", NetworkConfig::early()), ("late", NetworkConfig::late())] {
        let mut net = Network::build(cfg.clone().scaled(0.05), 1).unwrap();
        let input = Tensor::new(vec![2, 2, 19, 19, 19], (0..2 * 2 * 19 * 19 * 19).map(|i| (i % 7) as f32).collect()).unwrap();
        net.forward_segment(input, Mode::Train).unwrap();
        put("checkpoint", &format!("{name}.ckpt"), &checkpoint::to_bytes(&net));
        put("checkpoint", &format!("{name}_fresh.ckpt"), &checkpoint::to_bytes(&Network::build(cfg.scaled(0.05), 2).unwrap()));
    }

    let entry = |i: usize, split| SubjectEntry {
        id: format!("s{i}"),
        t1: format!("s{i}_t1.nii"),
        t2: format!("s{i}_t2.nii"),
        labels: (i != 2).then(|| format!("s{i}_labels.nii")),
        mask: format!("s{i}_mask.nii"),
        split,
    };
    let manifest = DatasetManifest::new(vec![
        entry(0, Some(Split::Train)),
        entry(1, Some(Split::Validation)),
        entry(2, Some(Split::Test)),
        entry(3, None),
    ]);
    put("dataset_manifest", "four.json", manifest.to_json().as_bytes());

    let ids: Vec<String> = (0..5).map(|i| format!("s{i}")).collect();
    let config = EnsembleConfig { k: 3, train_per_model: 3, val_per_model: 1, master_seed: 9, ..Default::default() };
    put("split_manifest", "three.json", draw_splits(&ids, &config).unwrap().to_json().as_bytes());

    let agreement = Volume::new([4, 3, 1], [1.0; 3], vec![0.4, 0.4, 1.0, 0.6, 0.4, 1.0, 1.0, 0.6, 1.0, 1.0, 0.8, 0.6]).unwrap();
    let fused = agreement.like(vec![1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3, 0]).unwrap();
    let export = SuggestionExport {
        volume_id: "demo".into(),
        k: 5,
        threshold: 0.6,
        suggestions: suggest_corrections(&agreement, 5, &fused, 0.6, 1).unwrap(),
    };
    put("suggestion_export", "demo.json", export.to_json().as_bytes());
}
