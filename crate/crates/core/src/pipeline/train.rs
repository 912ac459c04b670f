use std::collections::HashSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{assemble_batch, sample_segments, SegmentSample};
use super::{lr_at_epoch, Subject, TrainConfig};
use crate::autodiff::{RmsProp, Tape};
use crate::error::{Error, Result};
use crate::net::{Mode, Network};

/// Stream offset separating validation sampling from training sampling.
const VALIDATION_STREAM: u64 = 0x5641_4c49_4441_5445;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubepochRecord {
    pub epoch: usize,
    pub subepoch: usize,
    pub lr: f64,
    /// Mean training loss over the subepoch's segments.
    pub train_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss on the fixed validation segments; `None` without validation subjects.
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub subepochs: Vec<SubepochRecord>,
    pub epochs: Vec<EpochRecord>,
}

impl History {
    /// One row per subepoch; the validation column is filled on each epoch's
    /// last subepoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,subepoch,lr,train_loss,val_loss\n");
        for r in &self.subepochs {
            let last = self.subepochs.iter().filter(|s| s.epoch == r.epoch).map(|s| s.subepoch).max();
            let val = (last == Some(r.subepoch))
                .then(|| self.epochs.iter().find(|e| e.epoch == r.epoch).and_then(|e| e.val_loss))
                .flatten()
                .map_or(String::new(), |v| v.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", r.epoch, r.subepoch, r.lr, r.train_loss, val);
        }
        out
    }

    pub fn first_loss(&self) -> Option<f64> {
        self.subepochs.first().map(|r| r.train_loss)
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.subepochs.last().map(|r| r.train_loss)
    }
}

fn check_inputs(net: &Network, train: &[Subject], val: &[Subject], config: &TrainConfig) -> Result<()> {
    config.validate(net.config().shrink())?;
    if net.config().modalities != 2 {
        return Err(Error::Config(format!(
            "subjects carry two modalities, the network expects {}",
            net.config().modalities
        )));
    }
    if train.is_empty() {
        return Err(Error::Config("no training subjects".into()));
    }
    let ids: HashSet<&str> = train.iter().map(|s| s.id.as_str()).collect();
    if let Some(s) = val.iter().find(|s| ids.contains(s.id.as_str())) {
        return Err(Error::Config(format!("subject {} is in both the training and validation sets", s.id)));
    }
    Ok(())
}

/// Mean loss of `samples` in inference mode.
fn evaluate_loss(net: &Network, subjects: &[Subject], samples: &[SegmentSample], config: &TrainConfig) -> Result<f64> {
    let shrink = net.config().shrink();
    let out = config.output_side(shrink);
    let mut total = 0.0;
    for batch in samples.chunks(config.batch_size) {
        let (input, labels) = assemble_batch(subjects, batch, out, shrink / 2)?;
        let mut tape = Tape::new();
        let (probs, _) = net.forward_tape(&mut tape, input, Mode::Infer)?;
        let loss = tape.cross_entropy(probs, &labels)?;
        total += tape.value(loss).data()[0] as f64 * batch.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Trains `net` in place on `train` with the epoch/subepoch schedule of
/// `config`. Validation subjects are only scored, once per epoch.
pub fn train(net: &mut Network, train: &[Subject], val: &[Subject], config: &TrainConfig) -> Result<History> {
    check_inputs(net, train, val, config)?;
    let shrink = net.config().shrink();
    let out = config.output_side(shrink);
    let pad = shrink / 2;
    let optimizer = RmsProp::new(config.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let val_samples = if val.is_empty() || config.validation_samples == 0 {
        Vec::new()
    } else {
        let mut vrng = ChaCha8Rng::seed_from_u64(config.seed ^ VALIDATION_STREAM);
        sample_segments(val, config.validation_samples, &mut vrng, config, out)?
    };

    let mut history = History::default();
    for epoch in 1..=config.epochs {
        let lr = lr_at_epoch(epoch, config);
        for subepoch in 1..=config.subepochs_per_epoch {
            let samples = sample_segments(train, config.samples_per_subepoch, &mut rng, config, out)?;
            let mut total = 0.0;
            for (b, batch) in samples.chunks(config.batch_size).enumerate() {
                let (input, labels) = assemble_batch(train, batch, out, pad)?;
                let mut tape = Tape::new();
                let (probs, stats) = net.forward_tape(&mut tape, input, Mode::Train)?;
                let loss = tape.cross_entropy(probs, &labels)?;
                let value = tape.value(loss).data()[0];
                if !value.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        subepoch,
                        batch: b + 1,
                    });
                }
                net.params_mut().zero_grads();
                tape.backward(loss, net.params_mut())?;
                optimizer.step(net.params_mut(), lr)?;
                net.apply_batch_stats(&stats);
                total += value as f64 * batch.len() as f64;
            }
            let train_loss = total / samples.len() as f64;
            log::info!("epoch {epoch} subepoch {subepoch}: lr {lr} loss {train_loss:.5}");
            history.subepochs.push(SubepochRecord {
                epoch,
                subepoch,
                lr,
                train_loss,
            });
        }
        let val_loss = if val_samples.is_empty() {
            None
        } else {
            Some(evaluate_loss(net, val, &val_samples, config)?)
        };
        if let Some(v) = val_loss {
            log::info!("epoch {epoch}: validation loss {v:.5}");
        }
        history.epochs.push(EpochRecord { epoch, val_loss });
    }
    Ok(history)
}
