use std::path::{Path, PathBuf};

use isoseg_core::ensemble::{
    draw_splits, segment_with_ensemble, suggest_corrections, train_member, votes_from_agreement, EnsembleConfig,
    SuggestionExport, MAX_MODELS,
};
use isoseg_core::metrics::evaluate;
use isoseg_core::net::{checkpoint, Network};
use isoseg_core::pipeline::manifest::load_subject;
use isoseg_core::pipeline::{
    normalize_intensities, train, DatasetManifest, Split, Subject, SubjectEntry, CLASS_NAMES,
};
use isoseg_core::volume::{generate_phantom, read_volume, write_volume, AnyVolume, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::case::{CaseFiles, CaseManifest, CASE_FILE, CASE_SCHEMA, CASE_VERSION, SUGGESTIONS_FILE};
use crate::cli::{
    Common, EvaluateArgs, PhantomArgs, SegmentArgs, SuggestArgs, TrainArgs, TrainEnsembleArgs, TrainFlags,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const DATASET_FILE: &str = "dataset.json";

/// Effective configuration of a command, written to its output directory.
pub fn run_config_file(command: &str) -> String {
    format!("{command}.config.json")
}

/// List of the files a command wrote.
pub fn artifacts_file(command: &str) -> String {
    format!("{command}.artifacts.json")
}

/// Collects the files a command writes under its output directory.
struct Output {
    dir: PathBuf,
    command: &'static str,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Artifacts<'a> {
    command: &'a str,
    files: &'a [String],
}

impl Output {
    fn create(dir: &Path, command: &'static str, config: &RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let json = config.to_json();
        log::info!("effective config for {command}: {}", json.replace('\n', ""));
        let mut out = Output {
            dir: dir.to_path_buf(),
            command,
            files: Vec::new(),
        };
        out.text(&run_config_file(command), &json)?;
        Ok(out)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
    }

    fn volume(&mut self, name: &str, volume: impl Into<AnyVolume>) -> CliResult<()> {
        let path = self.path(name);
        Ok(write_volume(&volume.into(), path)?)
    }

    fn finish(mut self) -> CliResult<()> {
        let name = artifacts_file(self.command);
        self.files.push(name.clone());
        let artifacts = Artifacts {
            command: self.command,
            files: &self.files,
        };
        let mut json = serde_json::to_string_pretty(&artifacts).expect("artifacts serialize");
        json.push('\n');
        let path = self.dir.join(name);
        std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))
    }
}

fn base_config(common: &Common) -> CliResult<RunConfig> {
    let mut config = RunConfig::from_file(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn apply_train_flags(config: &mut RunConfig, flags: &TrainFlags) {
    let t = &mut config.train;
    let pairs = [
        (&mut t.epochs, flags.epochs),
        (&mut t.subepochs_per_epoch, flags.subepochs),
        (&mut t.samples_per_subepoch, flags.samples),
        (&mut t.batch_size, flags.batch),
    ];
    for (slot, value) in pairs {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(lr) = flags.lr {
        t.lr0 = lr;
    }
    if let Some(scale) = flags.scale {
        config.network.scale_factor = scale;
    }
    if let Some(fusion) = flags.fusion {
        config.network.fusion = fusion;
    }
    config.train.seed = config.seed;
}

pub fn phantom(args: &PhantomArgs) -> CliResult<()> {
    let mut config = base_config(&args.common)?;
    if let Some(dims) = args.dims {
        config.phantom.dims = dims;
    }
    if let Some(noise) = args.noise {
        config.phantom.noise_std = noise;
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if args.val + args.test > args.n {
        return Err(CliError::Usage(format!(
            "--val {} plus --test {} exceeds --n {}",
            args.val, args.test, args.n
        )));
    }
    config.phantom.seed = config.seed;
    let mut out = Output::create(&args.common.out, "phantom", &config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut entries = Vec::with_capacity(args.n);
    for i in 0..args.n {
        let id = format!("phantom_{i:03}");
        let phantom_config = isoseg_core::volume::PhantomConfig {
            seed: rng.random(),
            ..config.phantom.clone()
        };
        let subject = generate_phantom(&phantom_config, id.clone())?;
        let name = |what: &str| format!("{id}_{what}.nii");
        out.volume(&name("t1"), subject.t1.clone())?;
        out.volume(&name("t2"), subject.t2.clone())?;
        out.volume(&name("labels"), subject.labels()?.clone())?;
        out.volume(&name("mask"), subject.mask.clone())?;
        let split = if i >= args.n - args.test {
            Split::Test
        } else if i >= args.n - args.test - args.val {
            Split::Validation
        } else {
            Split::Train
        };
        entries.push(SubjectEntry {
            id: id.clone(),
            t1: name("t1"),
            t2: name("t2"),
            labels: Some(name("labels")),
            mask: name("mask"),
            split: Some(split),
        });
    }
    out.text(DATASET_FILE, &DatasetManifest::new(entries).to_json())?;
    out.finish()
}

fn load_manifest(path: &Path) -> CliResult<(DatasetManifest, PathBuf)> {
    let manifest = DatasetManifest::load(path)?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((manifest, base))
}

fn load_normalized(entries: &[&SubjectEntry], base: &Path) -> CliResult<Vec<Subject>> {
    entries
        .iter()
        .map(|e| Ok(normalize_intensities(&load_subject(e, base)?)?))
        .collect()
}

pub fn train_cmd(args: &TrainArgs) -> CliResult<()> {
    let mut config = base_config(&args.common)?;
    apply_train_flags(&mut config, &args.train);
    let (manifest, base) = load_manifest(&args.manifest)?;
    let train_entries: Vec<&SubjectEntry> = manifest
        .subjects
        .iter()
        .filter(|s| matches!(s.split, None | Some(Split::Train)))
        .collect();
    let val_entries: Vec<&SubjectEntry> = manifest.with_split(Split::Validation).collect();
    if train_entries.is_empty() {
        return Err(CliError::Usage("the manifest has no training subjects".into()));
    }
    let mut out = Output::create(&args.common.out, "train", &config)?;
    let train_set = load_normalized(&train_entries, &base)?;
    let val_set = load_normalized(&val_entries, &base)?;
    let mut net = Network::build(config.network.clone(), config.seed)?;
    let history = train(&mut net, &train_set, &val_set, &config.train)?;
    checkpoint::save(&net, out.path("model.ckpt"))?;
    out.text("history.csv", &history.to_csv())?;
    out.finish()
}

pub fn train_ensemble_cmd(args: &TrainEnsembleArgs) -> CliResult<()> {
    let mut config = base_config(&args.common)?;
    apply_train_flags(&mut config, &args.train);
    if let Some(k) = args.k {
        config.ensemble.k = k;
    }
    if let Some(n) = args.train_per_model {
        config.ensemble.train_per_model = n;
    }
    if let Some(n) = args.val_per_model {
        config.ensemble.val_per_model = n;
    }
    let (manifest, base) = load_manifest(&args.manifest)?;
    let pool: Vec<&SubjectEntry> = manifest.subjects.iter().filter(|s| s.split != Some(Split::Test)).collect();
    let ensemble = EnsembleConfig {
        k: config.ensemble.k,
        train_per_model: config.ensemble.train_per_model,
        val_per_model: config.ensemble.val_per_model,
        network: config.network.clone(),
        train: config.train.clone(),
        master_seed: config.seed,
    };
    let ids: Vec<String> = pool.iter().map(|e| e.id.clone()).collect();
    let splits = draw_splits(&ids, &ensemble)?;
    let mut out = Output::create(&args.common.out, "train-ensemble", &config)?;
    let subjects = load_normalized(&pool, &base)?;
    out.text("splits.json", &splits.to_json())?;
    for split in &splits.models {
        log::info!("training ensemble member {} of {}", split.index + 1, ensemble.k);
        let (net, history) = train_member(&subjects, split, &ensemble)?;
        checkpoint::save(&net, out.path(&format!("model_{:02}.ckpt", split.index)))?;
        out.text(&format!("history_{:02}.csv", split.index), &history.to_csv())?;
    }
    out.finish()
}

/// Expands directories into their `*.ckpt` files, sorted by name.
fn checkpoint_paths(args: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in args {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ckpt"))
                .collect();
            if found.is_empty() {
                return Err(CliError::Usage(format!("{}: no .ckpt files", p.display())));
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.len() > MAX_MODELS {
        return Err(CliError::Usage(format!("at most {MAX_MODELS} checkpoints can vote")));
    }
    Ok(out)
}

pub fn segment(args: &SegmentArgs) -> CliResult<()> {
    let config = base_config(&args.common)?;
    let paths = checkpoint_paths(&args.checkpoints)?;
    let networks = paths
        .iter()
        .map(checkpoint::load)
        .collect::<Result<Vec<_>, _>>()?;
    let (manifest, base) = load_manifest(&args.manifest)?;
    let entry = manifest
        .find(&args.subject)
        .ok_or_else(|| CliError::Usage(format!("subject {:?} is not in the manifest", args.subject)))?;
    let raw = load_subject(entry, &base)?;
    let subject = normalize_intensities(&raw)?;
    let mut out = Output::create(&args.common.out, "segment", &config)?;
    let seg = segment_with_ensemble(&networks, &subject)?;

    out.volume("t1.nii", raw.t1.clone())?;
    out.volume("t2.nii", raw.t2.clone())?;
    out.volume("mask.nii", raw.mask.clone())?;
    out.volume("fused.nii", seg.fused.labels.clone())?;
    out.volume("agreement.nii", seg.fused.agreement.agreement.clone())?;
    let truth = match &raw.labels {
        Some(labels) => {
            out.volume("truth.nii", labels.clone())?;
            Some("truth.nii".to_string())
        }
        None => None,
    };
    let mut probabilities = Vec::new();
    for (name, p) in CLASS_NAMES.iter().zip(&seg.probabilities) {
        let file = format!("prob_{}.nii", name.to_lowercase());
        out.volume(&file, p.clone())?;
        probabilities.push(file);
    }
    let case = CaseManifest {
        schema: CASE_SCHEMA.into(),
        version: CASE_VERSION,
        volume_id: subject.id.clone(),
        k: networks.len(),
        files: CaseFiles {
            t1: "t1.nii".into(),
            t2: "t2.nii".into(),
            mask: "mask.nii".into(),
            fused: "fused.nii".into(),
            agreement: "agreement.nii".into(),
            truth,
            probabilities,
        },
    };
    let mut json = serde_json::to_string_pretty(&case).expect("case serializes");
    json.push('\n');
    out.text(CASE_FILE, &json)?;
    out.finish()
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> CliResult<()> {
    let mut config = base_config(&args.common)?;
    if let Some(mode) = args.hausdorff {
        config.hausdorff = mode;
    }
    let pred = read_volume(&args.pred)?.to_labels()?;
    let truth = read_volume(&args.truth)?.to_labels()?;
    let mut out = Output::create(&args.common.out, "evaluate", &config)?;
    let report = evaluate(&pred, &truth, config.hausdorff)?;
    out.text("metrics.json", &report.to_json())?;
    out.text("metrics.csv", &report.to_csv())?;
    out.finish()
}

/// Smallest ensemble size under which every agreement value is a whole
/// number of votes.
pub fn infer_k(agreement: &Volume<f32>) -> CliResult<usize> {
    (1..=MAX_MODELS)
        .find(|&k| {
            agreement.data().iter().all(|&a| {
                let votes = a as f64 * k as f64;
                votes >= 0.5 && (votes - votes.round()).abs() < 1e-3
            })
        })
        .ok_or_else(|| CliError::Parse("agreement values are not vote fractions; pass --k".into()))
}

pub fn suggest(args: &SuggestArgs) -> CliResult<()> {
    let mut config = base_config(&args.common)?;
    if let Some(t) = args.threshold {
        config.suggest.threshold = t;
    }
    if let Some(m) = args.min_size {
        config.suggest.min_size = m;
    }
    let agreement = read_volume(&args.agreement)?.to_f32();
    let fused = read_volume(&args.fused)?.to_labels()?;
    let k = match args.k {
        Some(k) => k,
        None => infer_k(&agreement)?,
    };
    if let Some(&a) = agreement
        .data()
        .iter()
        .find(|&&a| (votes_from_agreement(a, k) as f64 / k as f64 - a as f64).abs() > 1e-3)
    {
        return Err(CliError::Parse(format!("agreement value {a} is not a multiple of 1/{k}")));
    }
    let volume_id = args.volume_id.clone().unwrap_or_else(|| {
        args.fused
            .file_stem()
            .map_or_else(|| "volume".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut out = Output::create(&args.common.out, "suggest", &config)?;
    let suggestions = suggest_corrections(&agreement, k, &fused, config.suggest.threshold, config.suggest.min_size)?;
    let export = SuggestionExport {
        volume_id,
        k,
        threshold: config.suggest.threshold,
        suggestions,
    };
    out.text(SUGGESTIONS_FILE, &export.to_json())?;
    out.finish()
}
