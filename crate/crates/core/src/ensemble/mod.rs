//! Ensembles of independently trained networks: majority-vote fusion,
//! agreement maps, confidence analysis and correction suggestions.

mod analysis;
mod suggest;
mod vote;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use analysis::{
    confidence_error_correlation, confidence_histograms, indicator_correlation, is_low, partition_confidence,
    ClassCorrelation, ClassHistogram, ConfidenceHistograms, ConfidencePartition, CorrelationReport,
    DEFAULT_THRESHOLD,
};
pub use suggest::{components, suggest_corrections, Suggestion, SuggestionExport, DEFAULT_MIN_SIZE};
pub use vote::{majority_vote, mean_probabilities, votes_from_agreement, AgreementMap, Fusion, MAX_MODELS};

use crate::error::{Error, Result};
use crate::net::{Network, NetworkConfig};
use crate::pipeline::{dense_inference, train, History, Segmentation, Subject, TrainConfig};
use crate::volume::Volume;

pub const SPLIT_SCHEMA: &str = "isoseg-splits";
pub const SPLIT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub k: usize,
    pub train_per_model: usize,
    pub val_per_model: usize,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub master_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            k: 10,
            train_per_model: 8,
            val_per_model: 2,
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            master_seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self, available: usize) -> Result<()> {
        if self.k == 0 || self.k > MAX_MODELS {
            return Err(Error::Config(format!("k must lie in 1..={MAX_MODELS}, got {}", self.k)));
        }
        if self.train_per_model == 0 {
            return Err(Error::Config("train_per_model must be positive".into()));
        }
        let need = self.train_per_model + self.val_per_model;
        if need > available {
            return Err(Error::Config(format!(
                "each model needs {need} subjects ({} train + {} validation), only {available} available",
                self.train_per_model, self.val_per_model
            )));
        }
        Ok(())
    }
}

/// The subjects one ensemble member trains and validates on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSplit {
    pub index: usize,
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub schema: String,
    pub version: u32,
    pub master_seed: u64,
    pub models: Vec<ModelSplit>,
}

impl SplitManifest {
    pub fn parse(json: &[u8]) -> Result<Self> {
        let m: SplitManifest = serde_json::from_slice(json)?;
        if m.schema != SPLIT_SCHEMA {
            return Err(Error::malformed(
                "split manifest",
                format!("schema {:?} is not {SPLIT_SCHEMA:?}", m.schema),
            ));
        }
        if m.version != SPLIT_VERSION {
            return Err(Error::malformed(
                "split manifest",
                format!("version {} is not supported (expected {SPLIT_VERSION})", m.version),
            ));
        }
        check_seeds(&m.models)?;
        for model in &m.models {
            let train: HashSet<&String> = model.train.iter().collect();
            if train.len() != model.train.len() || model.validation.iter().any(|id| train.contains(id)) {
                return Err(Error::malformed(
                    "split manifest",
                    format!("model {} lists a subject twice", model.index),
                ));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("splits serialize");
        s.push('\n');
        s
    }
}

fn check_seeds(models: &[ModelSplit]) -> Result<()> {
    let mut seen = HashSet::new();
    for m in models {
        if !seen.insert(m.seed) {
            return Err(Error::Config(format!("duplicate child seed {} (model {})", m.seed, m.index)));
        }
    }
    Ok(())
}

/// Draws one random train/validation split per model. Model `i` uses the
/// child seed `master_seed + i`.
pub fn draw_splits(ids: &[String], config: &EnsembleConfig) -> Result<SplitManifest> {
    config.validate(ids.len())?;
    let unique: HashSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(Error::Data("subject ids must be unique".into()));
    }
    let models: Vec<ModelSplit> = (0..config.k)
        .map(|index| {
            let seed = config.master_seed.wrapping_add(index as u64);
            let mut order: Vec<usize> = (0..ids.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let pick = |r: std::ops::Range<usize>| order[r].iter().map(|&i| ids[i].clone()).collect();
            ModelSplit {
                index,
                seed,
                train: pick(0..config.train_per_model),
                validation: pick(config.train_per_model..config.train_per_model + config.val_per_model),
            }
        })
        .collect();
    check_seeds(&models)?;
    Ok(SplitManifest {
        schema: SPLIT_SCHEMA.into(),
        version: SPLIT_VERSION,
        master_seed: config.master_seed,
        models,
    })
}

fn select(subjects: &[Subject], ids: &[String]) -> Result<Vec<Subject>> {
    ids.iter()
        .map(|id| {
            subjects
                .iter()
                .find(|s| &s.id == id)
                .cloned()
                .ok_or_else(|| Error::Data(format!("split names unknown subject {id}")))
        })
        .collect()
}

/// Trains the member described by `split`: its network and training seeds
/// are both the split's child seed.
pub fn train_member(
    subjects: &[Subject],
    split: &ModelSplit,
    config: &EnsembleConfig,
) -> Result<(Network, History)> {
    let train_set = select(subjects, &split.train)?;
    let val_set = select(subjects, &split.validation)?;
    let mut net = Network::build(config.network.clone(), split.seed)?;
    let train_config = TrainConfig {
        seed: split.seed,
        ..config.train.clone()
    };
    let history = train(&mut net, &train_set, &val_set, &train_config)?;
    Ok((net, history))
}

pub struct TrainedEnsemble {
    pub networks: Vec<Network>,
    pub histories: Vec<History>,
    pub splits: SplitManifest,
}

/// Draws the splits and trains every member in turn.
pub fn train_ensemble(subjects: &[Subject], config: &EnsembleConfig) -> Result<TrainedEnsemble> {
    let ids: Vec<String> = subjects.iter().map(|s| s.id.clone()).collect();
    let splits = draw_splits(&ids, config)?;
    let mut networks = Vec::with_capacity(config.k);
    let mut histories = Vec::with_capacity(config.k);
    for split in &splits.models {
        log::info!("training ensemble member {} of {}", split.index + 1, config.k);
        let (net, history) = train_member(subjects, split, config)?;
        networks.push(net);
        histories.push(history);
    }
    Ok(TrainedEnsemble {
        networks,
        histories,
        splits,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSegmentation {
    pub members: Vec<Segmentation>,
    pub fused: Fusion,
    /// Mean class probabilities over the members.
    pub probabilities: Vec<Volume<f32>>,
}

/// Dense inference with every member followed by majority-vote fusion.
pub fn segment_with_ensemble(networks: &[Network], subject: &Subject) -> Result<EnsembleSegmentation> {
    let members = networks
        .iter()
        .map(|net| dense_inference(net, subject))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Volume<u8>> = members.iter().map(|m| m.labels.clone()).collect();
    let probs: Vec<Vec<Volume<f32>>> = members.iter().map(|m| m.probabilities.clone()).collect();
    let fused = majority_vote(&labels, &probs)?;
    let probabilities = mean_probabilities(&probs)?;
    Ok(EnsembleSegmentation {
        members,
        fused,
        probabilities,
    })
}

/// `folds` distinct subject indices drawn from `seed`, one held out per
/// cross-validation round.
pub fn holdout_subjects(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds == 0 || folds > n {
        return Err(Error::Config(format!("cannot hold out {folds} of {n} subjects")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(folds);
    Ok(order)
}
