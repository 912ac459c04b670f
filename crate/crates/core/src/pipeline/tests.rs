use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::volume::{generate_phantom, write_volume, PhantomConfig, Volume};

fn phantom(dims: usize, seed: u64) -> Subject {
    let config = PhantomConfig {
        dims: [dims; 3],
        seed,
        ..Default::default()
    };
    generate_phantom(&config, &format!("p{seed}")).unwrap()
}

fn masked_stats(image: &Volume<f32>, mask: &Volume<u8>) -> (f64, f64) {
    let v: Vec<f64> = image
        .data()
        .iter()
        .zip(mask.data())
        .filter(|(_, &m)| m != 0)
        .map(|(&x, _)| x as f64)
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    (mean, var.sqrt())
}

#[test]
fn lr_schedule_examples() {
    let c = TrainConfig::default();
    assert_eq!(lr_at_epoch(1, &c), 0.001);
    assert_eq!(lr_at_epoch(9, &c), 0.001);
    assert_eq!(lr_at_epoch(10, &c), 0.0005);
    assert_eq!(lr_at_epoch(14, &c), 0.0005);
    assert_eq!(lr_at_epoch(15, &c), 0.00025);
    assert_eq!(lr_at_epoch(22, &c), 0.000125);
    assert_eq!(lr_at_epoch(30, &c), 0.001 / 32.0);
}

#[test]
fn lr_halves_only_at_the_scheduled_epochs() {
    let c = TrainConfig::default();
    for e in 2..=40 {
        let (prev, cur) = (lr_at_epoch(e - 1, &c), lr_at_epoch(e, &c));
        if [10, 15, 20, 25, 30, 35, 40].contains(&e) {
            assert_eq!(cur, prev / 2.0, "epoch {e}");
        } else {
            assert_eq!(cur, prev, "epoch {e}");
        }
    }
}

#[test]
fn train_config_validation() {
    let shrink = 18;
    assert!(TrainConfig::default().validate(shrink).is_ok());
    assert_eq!(TrainConfig::default().output_side(shrink), 9);
    assert!(TrainConfig { segment_side: 18, ..Default::default() }.validate(shrink).is_err());
    assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate(shrink).is_err());
    assert!(TrainConfig { foreground_center_fraction: 1.5, ..Default::default() }.validate(shrink).is_err());
    assert!(TrainConfig { lr0: -1.0, ..Default::default() }.validate(shrink).is_err());
    let parsed: TrainConfig = serde_json::from_str(r#"{"epochs": 2}"#).unwrap();
    assert_eq!(parsed.epochs, 2);
    assert_eq!(parsed.batch_size, 20);
    assert!(serde_json::from_str::<TrainConfig>(r#"{"epoch": 2}"#).is_err());
}

#[test]
fn normalization_statistics() {
    let s = normalize_intensities(&phantom(24, 1)).unwrap();
    for image in [&s.t1, &s.t2] {
        let (mean, std) = masked_stats(image, &s.mask);
        assert!(mean.abs() < 1e-5, "mean {mean}");
        assert!((std - 1.0).abs() < 1e-4, "std {std}");
        for (&v, &m) in image.data().iter().zip(s.mask.data()) {
            if m == 0 {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn normalization_is_idempotent() {
    let once = normalize_intensities(&phantom(20, 2)).unwrap();
    let twice = normalize_intensities(&once).unwrap();
    for (a, b) in once.t1.data().iter().chain(once.t2.data()).zip(twice.t1.data().iter().chain(twice.t2.data())) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn normalization_is_affine_invariant() {
    let s = phantom(20, 3);
    let mut shifted = s.clone();
    shifted.t1 = s.t1.map(|v| 2.5 * v - 7.0);
    shifted.t2 = s.t2.map(|v| 0.3 * v + 100.0);
    let a = normalize_intensities(&s).unwrap();
    let b = normalize_intensities(&shifted).unwrap();
    for (x, y) in a.t1.data().iter().chain(a.t2.data()).zip(b.t1.data().iter().chain(b.t2.data())) {
        assert!((x - y).abs() < 1e-4, "{x} vs {y}");
    }
}

#[test]
fn normalization_rejects_constant_images() {
    let mut s = phantom(16, 4);
    s.t2 = s.t2.map(|_| 3.0);
    let err = normalize_intensities(&s).unwrap_err();
    assert!(err.to_string().contains("zero intensity variance"), "{err}");
}

#[test]
fn subject_checks_grids_and_labels() {
    let s = phantom(16, 5);
    let small = Volume::filled([8, 16, 16], [1.0; 3], 0f32).unwrap();
    assert!(Subject::new("x", small, s.t2.clone(), s.labels.clone(), s.mask.clone()).is_err());
    let bad = s.labels().unwrap().map(|l| l + 4);
    assert!(Subject::new("x", s.t1.clone(), s.t2.clone(), Some(bad), s.mask.clone()).is_err());
    let unlabelled = Subject::new("x", s.t1.clone(), s.t2.clone(), None, s.mask.clone()).unwrap();
    assert!(unlabelled.labels().is_err());
}

#[test]
fn thousand_samples_stay_inside() {
    let subjects = vec![phantom(24, 6), phantom(30, 7)];
    let config = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = sample_segments(&subjects, 1000, &mut rng, &config, 9).unwrap();
    assert_eq!(samples.len(), 1000);
    let mut per_subject = [0; 2];
    for s in &samples {
        per_subject[s.subject] += 1;
        let dims = subjects[s.subject].dims();
        for a in 0..3 {
            assert!(s.origin[a] + 9 <= dims[a]);
        }
    }
    assert!(per_subject.iter().all(|&n| n > 400), "{per_subject:?}");
}

#[test]
fn forced_foreground_centre() {
    let mut s = phantom(24, 8);
    let mut labels = s.labels().unwrap().map(|_| 0u8);
    labels.set([11, 12, 13], 2);
    s.labels = Some(labels);
    let config = TrainConfig {
        foreground_center_fraction: 1.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for sample in sample_segments(&[s], 50, &mut rng, &config, 9).unwrap() {
        assert_eq!(sample.origin, [7, 8, 9]);
        assert_eq!(sample.input_corner(9), [-2, -1, 0]);
    }
}

#[test]
fn sampling_is_deterministic_and_seed_dependent() {
    let subjects = vec![phantom(20, 9)];
    let config = TrainConfig::default();
    let draw = |seed| sample_segments(&subjects, 100, &mut ChaCha8Rng::seed_from_u64(seed), &config, 9).unwrap();
    assert_eq!(draw(3), draw(3));
    assert_ne!(draw(3), draw(4));
}

#[test]
fn sampling_skips_empty_masks() {
    let good = phantom(20, 10);
    let mut empty = phantom(20, 11);
    empty.mask = empty.mask.map(|_| 0);
    let config = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = sample_segments(&[empty.clone(), good], 200, &mut rng, &config, 9).unwrap();
    assert!(samples.iter().all(|s| s.subject == 1));
    assert!(sample_segments(&[empty], 10, &mut rng, &config, 9).is_err());
    assert!(sample_segments(&[phantom(20, 12)], 0, &mut rng, &config, 9).is_err());
}

#[test]
fn extraction_zero_pads_outside_the_grid() {
    let s = phantom(12, 13);
    let mut out = Vec::new();
    extract_input(&s, [-2, 3, 10], [4, 2, 3], &mut out);
    assert_eq!(out.len(), 2 * 24);
    let mut i = 0;
    for image in [&s.t1, &s.t2] {
        for z in 10..13isize {
            for y in 3..5isize {
                for x in -2..2isize {
                    let expected = if x >= 0 && z < 12 {
                        image.get([x as usize, y as usize, z as usize])
                    } else {
                        0.0
                    };
                    assert_eq!(out[i], expected, "({x}, {y}, {z})");
                    i += 1;
                }
            }
        }
    }
}

#[test]
fn batch_targets_are_the_output_windows() {
    let subjects = vec![phantom(20, 14)];
    let samples = [SegmentSample {
        subject: 0,
        origin: [3, 5, 7],
    }];
    let (input, labels) = assemble_batch(&subjects, &samples, 9, 9).unwrap();
    assert_eq!(input.shape(), &[1, 2, 27, 27, 27]);
    let truth = subjects[0].labels().unwrap();
    assert_eq!(labels[0], truth.get([3, 5, 7]));
    assert_eq!(labels[728], truth.get([11, 13, 15]));
    assert_eq!(labels[1 + 9 * (2 + 9 * 4)], truth.get([4, 7, 11]));
    // input voxel (x, y, z) = (9, 9, 9) is the first target voxel
    let t1 = &input.data()[..27 * 27 * 27];
    assert_eq!(t1[9 + 27 * (9 + 27 * 9)], subjects[0].t1.get([3, 5, 7]));
}

#[test]
fn forty_five_cube_has_125_tiles_covering_each_voxel_once() {
    let dims = [45, 45, 45];
    let tiles = tile_origins(dims, TILE);
    assert_eq!(tiles.len(), 125);
    let mut hits = vec![0u8; 45 * 45 * 45];
    for t in tiles {
        for z in 0..TILE {
            for y in 0..TILE {
                for x in 0..TILE {
                    hits[(t[0] + x) + 45 * ((t[1] + y) + 45 * (t[2] + z))] += 1;
                }
            }
        }
    }
    assert!(hits.iter().all(|&h| h == 1));
}

#[test]
fn uneven_dims_are_covered_with_overhang() {
    let dims = [48, 10, 9];
    let tiles = tile_origins(dims, TILE);
    assert_eq!(tiles.len(), 6 * 2);
    let mut hits = vec![0u8; 48 * 10 * 9];
    for t in tiles {
        for z in t[2]..(t[2] + TILE).min(9) {
            for y in t[1]..(t[1] + TILE).min(10) {
                for x in t[0]..(t[0] + TILE).min(48) {
                    hits[x + 48 * (y + 10 * z)] += 1;
                }
            }
        }
    }
    assert!(hits.iter().all(|&h| h == 1));
}

#[test]
fn manifest_rejects_bad_documents() {
    let ok = r#"{"schema":"isoseg-dataset","version":1,"subjects":[
        {"id":"a","t1":"a_t1.nii","t2":"a_t2.nii","mask":"a_mask.nii","split":"train"},
        {"id":"b","t1":"b_t1.nii","t2":"b_t2.nii","labels":"b_lab.nii","mask":"b_mask.nii"}]}"#;
    let m = DatasetManifest::parse(ok.as_bytes()).unwrap();
    assert_eq!(m.with_split(Split::Train).count(), 1);
    assert_eq!(m.find("b").unwrap().labels.as_deref(), Some("b_lab.nii"));
    assert_eq!(DatasetManifest::parse(m.to_json().as_bytes()).unwrap(), m);

    for bad in [
        ok.replace("isoseg-dataset", "other"),
        ok.replace("\"version\":1", "\"version\":2"),
        ok.replace("\"id\":\"b\"", "\"id\":\"a\""),
        ok.replace("\"split\":\"train\"", "\"split\":\"holdout\""),
        ok.replace("\"mask\":\"a_mask.nii\"", "\"mask\":\"a_mask.nii\",\"extra\":1"),
        ok[..40].to_string(),
    ] {
        assert!(DatasetManifest::parse(bad.as_bytes()).is_err(), "{bad}");
    }
}

#[test]
fn manifest_paths_resolve_relative_to_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("data");
    std::fs::create_dir(&sub).unwrap();
    let s = phantom(12, 15);
    write_volume(&s.t1.clone().into(), sub.join("t1.nii")).unwrap();
    write_volume(&s.t2.clone().into(), sub.join("t2.vjson")).unwrap();
    write_volume(&s.labels().unwrap().clone().into(), sub.join("labels.nii")).unwrap();
    write_volume(&s.mask.clone().into(), sub.join("mask.nii")).unwrap();
    let manifest = DatasetManifest::new(vec![SubjectEntry {
        id: s.id.clone(),
        t1: "t1.nii".into(),
        t2: "t2.vjson".into(),
        labels: Some("labels.nii".into()),
        mask: "mask.nii".into(),
        split: Some(Split::Test),
    }]);
    let path = sub.join("dataset.json");
    manifest.save(&path).unwrap();
    let loaded = load_subjects(&path).unwrap();
    assert_eq!(loaded, vec![s]);
}
