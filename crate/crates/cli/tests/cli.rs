use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isoseg_core::net::{checkpoint, Mode, Network, NetworkConfig};
use isoseg_core::autodiff::Tensor;
use isoseg_core::volume::read_volume;

fn isoseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoseg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = isoseg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Exit code and the parsed single error line.
fn fails(args: &[&str]) -> (i32, serde_json::Value) {
    let out = isoseg(args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one stderr line, got {stderr:?}");
    (out.status.code().unwrap(), serde_json::from_str(lines[0]).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().into(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn phantoms(dir: &Path, n: &str, seed: &str) {
    ok(&["phantom", "--n", n, "--seed", seed, "--dims", "20", "--val", "1", "--out", s(dir)]);
}

#[test]
fn phantom_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    phantoms(&a, "3", "7");
    phantoms(&b, "3", "7");
    let fa = files(&a);
    assert_eq!(fa, files(&b));
    // 4 volumes per subject, the manifest, the config echo and the artifact list
    assert_eq!(fa.len(), 3 * 4 + 3);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("dataset.json")).unwrap()).unwrap();
    let splits: Vec<&str> = manifest["subjects"].as_array().unwrap().iter().map(|s| s["split"].as_str().unwrap()).collect();
    assert_eq!(splits, ["train", "train", "validation"]);
    let c = tmp.path().join("c");
    phantoms(&c, "3", "8");
    assert_ne!(files(&c), fa);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[phantom]\ndims = [16, 16, 16]\nnoise_std = 0.05\n").unwrap();
    let out = tmp.path().join("out");
    ok(&["phantom", "--n", "1", "--config", s(&cfg), "--noise", "0.2", "--out", s(&out)]);
    let echo: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("phantom.config.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 3);
    assert_eq!(echo["phantom"]["dims"], serde_json::json!([16, 16, 16]));
    assert!((echo["phantom"]["noise_std"].as_f64().unwrap() - 0.2).abs() < 1e-6);
    assert_eq!(read_volume(out.join("phantom_000_t1.nii")).unwrap().dims(), [16, 16, 16]);

    let json_cfg = tmp.path().join("run.json");
    std::fs::write(&json_cfg, r#"{"seed": 5, "phantom": {"dims": [12, 14, 16]}}"#).unwrap();
    let out2 = tmp.path().join("out2");
    ok(&["phantom", "--n", "1", "--config", s(&json_cfg), "--seed", "9", "--out", s(&out2)]);
    let echo: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out2.join("phantom.config.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 9);
    assert_eq!(read_volume(out2.join("phantom_000_mask.nii")).unwrap().dims(), [12, 14, 16]);
}

#[test]
fn errors_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");

    let (code, line) = fails(&["phantom", "--bogus", "--out", s(&out)]);
    assert_eq!((code, line["error"].as_str()), (2, Some("usage")));
    assert_eq!(line["code"], 2);

    let missing = tmp.path().join("missing.nii");
    let (code, line) = fails(&["evaluate", "--pred", s(&missing), "--truth", s(&missing), "--out", s(&out)]);
    assert_eq!((code, line["error"].as_str()), (3, Some("io")));
    assert!(line["message"].as_str().unwrap().contains("missing.nii"));

    let garbage = tmp.path().join("garbage.nii");
    std::fs::write(&garbage, vec![7u8; 400]).unwrap();
    let (code, line) = fails(&["evaluate", "--pred", s(&garbage), "--truth", s(&garbage), "--out", s(&out)]);
    assert_eq!((code, line["error"].as_str()), (4, Some("parse")));

    let bad_manifest = tmp.path().join("dataset.json");
    std::fs::write(&bad_manifest, r#"{"schema":"isoseg-dataset","version":9,"subjects":[]}"#).unwrap();
    let (code, _) = fails(&["train", "--manifest", s(&bad_manifest), "--out", s(&out)]);
    assert_eq!(code, 4);

    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[phantom]\ncolour = 3\n").unwrap();
    let (code, _) = fails(&["phantom", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 4);

    let (code, _) = fails(&["phantom", "--n", "2", "--val", "3", "--out", s(&out)]);
    assert_eq!(code, 2);
}

#[test]
fn evaluate_identical_volumes_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    phantoms(&data, "1", "1");
    let labels = data.join("phantom_000_labels.nii");
    let out = tmp.path().join("eval");
    ok(&["evaluate", "--pred", s(&labels), "--truth", s(&labels), "--out", s(&out)]);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,dsc,mhd,asd");
    assert_eq!(lines.len(), 4);
    for (line, class) in lines[1..].iter().zip(["CSF", "GM", "WM"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], class);
        assert_eq!(cols[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
    }
    assert!(out.join("metrics.json").exists());
}

/// Writes `k` untrained but statistics-initialized checkpoints.
fn fake_checkpoints(dir: &Path, k: u64) {
    std::fs::create_dir_all(dir).unwrap();
    let input = Tensor::new(vec![1, 2, 19, 19, 19], (0..2 * 19 * 19 * 19).map(|i| ((i % 13) as f32 - 6.0) / 4.0).collect())
        .unwrap();
    for seed in 0..k {
        let mut net = Network::build(NetworkConfig::early().scaled(0.1), seed).unwrap();
        net.forward_segment(input.clone(), Mode::Train).unwrap();
        checkpoint::save(&net, dir.join(format!("model_{seed:02}.ckpt"))).unwrap();
    }
}

#[test]
fn segment_with_ten_checkpoints_gives_tenth_agreements_then_suggests() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    phantoms(&data, "1", "2");
    let models = tmp.path().join("models");
    fake_checkpoints(&models, 10);
    let case = tmp.path().join("case");
    let manifest = data.join("dataset.json");
    ok(&["segment", "--checkpoint", s(&models), "--manifest", s(&manifest), "--subject", "phantom_000", "--out", s(&case)]);
    let agreement = read_volume(case.join("agreement.nii")).unwrap().to_f32();
    for &a in agreement.data() {
        let votes = a * 10.0;
        assert!((1.0..=10.0).contains(&votes) && (votes - votes.round()).abs() < 1e-4, "{a}");
    }
    let case_json: serde_json::Value = serde_json::from_slice(&std::fs::read(case.join("case.json")).unwrap()).unwrap();
    assert_eq!(case_json["K"], 10);
    for f in ["fused.nii", "t1.nii", "t2.nii", "mask.nii", "truth.nii", "prob_csf.nii", "prob_wm.nii"] {
        assert!(case.join(f).exists(), "{f}");
    }

    let fused = case.join("fused.nii");
    let agreement_path = case.join("agreement.nii");
    ok(&["suggest", "--agreement", s(&agreement_path), "--fused", s(&fused), "--min-size", "1", "--out", s(&case)]);
    let export: serde_json::Value =
        serde_json::from_slice(&std::fs::read(case.join("suggestions.json")).unwrap()).unwrap();
    assert_eq!(export["volume_id"], "fused");
    assert!(export["K"].as_u64().unwrap() >= 1);
    let ranks: Vec<u64> = export["suggestions"].as_array().unwrap().iter().map(|s| s["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, (1..=ranks.len() as u64).collect::<Vec<_>>());
    // the suggest run must not clobber the segment run log
    assert!(case.join("segment.config.json").exists() && case.join("suggest.config.json").exists());

    let (code, _) = fails(&["suggest", "--agreement", s(&fused), "--fused", s(&fused), "--k", "3", "--out", s(&case)]);
    assert_eq!(code, 4);
}

#[test]
fn train_and_train_ensemble_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    phantoms(&data, "3", "4");
    let manifest = data.join("dataset.json");
    let small = ["--epochs", "1", "--subepochs", "1", "--samples", "4", "--batch", "2", "--scale", "0.1"];

    let run = tmp.path().join("run");
    let mut args = vec!["train", "--manifest", s(&manifest), "--out", s(&run), "--seed", "3"];
    args.extend(small);
    ok(&args);
    let history = std::fs::read_to_string(run.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    let net = checkpoint::load(run.join("model.ckpt")).unwrap();
    assert_eq!(net.seed(), 3);

    let ens = tmp.path().join("ens");
    let mut args = vec![
        "train-ensemble", "--manifest", s(&manifest), "--out", s(&ens), "--k", "2",
        "--train-per-model", "2", "--val-per-model", "1",
    ];
    args.extend(small);
    ok(&args);
    let splits: serde_json::Value = serde_json::from_slice(&std::fs::read(ens.join("splits.json")).unwrap()).unwrap();
    let models = splits["models"].as_array().unwrap();
    assert_eq!(models.len(), 2);
    assert_eq!(models[1]["seed"], 1);
    assert!(ens.join("model_00.ckpt").exists() && ens.join("model_01.ckpt").exists());
    let artifacts: serde_json::Value =
        serde_json::from_slice(&std::fs::read(ens.join("train-ensemble.artifacts.json")).unwrap()).unwrap();
    assert!(artifacts["files"].as_array().unwrap().iter().any(|f| f == "history_01.csv"));
}
