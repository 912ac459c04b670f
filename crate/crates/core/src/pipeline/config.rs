use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub subepochs_per_epoch: usize,
    /// Segments drawn per subepoch.
    pub samples_per_subepoch: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    /// First epoch (1-based) at which the learning rate is halved.
    pub lr_halve_start: usize,
    pub lr_halve_every: usize,
    pub segment_side: usize,
    pub seed: u64,
    /// Probability that a segment's target window is centred on a
    /// non-background voxel rather than on any masked voxel.
    pub foreground_center_fraction: f64,
    /// Validation segments scored once per epoch.
    pub validation_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            subepochs_per_epoch: 20,
            samples_per_subepoch: 1000,
            batch_size: 20,
            lr0: 0.001,
            momentum: 0.6,
            lr_halve_start: 10,
            lr_halve_every: 5,
            segment_side: 27,
            seed: 0,
            foreground_center_fraction: 0.5,
            validation_samples: 200,
        }
    }
}

impl TrainConfig {
    /// Rejects configurations that cannot run; `shrink` is the network's
    /// input-to-output side reduction.
    pub fn validate(&self, shrink: usize) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("subepochs_per_epoch", self.subepochs_per_epoch),
            ("samples_per_subepoch", self.samples_per_subepoch),
            ("batch_size", self.batch_size),
            ("lr_halve_start", self.lr_halve_start),
            ("lr_halve_every", self.lr_halve_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.lr0.is_finite() && self.lr0 >= 0.0) {
            return Err(Error::Config(format!("lr0 {} must be finite and non-negative", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} must lie in [0, 1)", self.momentum)));
        }
        if !(0.0..=1.0).contains(&self.foreground_center_fraction) {
            return Err(Error::Config(format!(
                "foreground_center_fraction {} must lie in [0, 1]",
                self.foreground_center_fraction
            )));
        }
        if self.segment_side <= shrink {
            return Err(Error::Config(format!(
                "segment_side {} leaves no output voxels (network shrinks by {shrink})",
                self.segment_side
            )));
        }
        Ok(())
    }

    pub fn output_side(&self, shrink: usize) -> usize {
        self.segment_side - shrink
    }
}

/// Learning rate for a 1-based epoch: `lr0`, halved at the start of epoch
/// `lr_halve_start` and again every `lr_halve_every` epochs after it.
pub fn lr_at_epoch(epoch: usize, config: &TrainConfig) -> f64 {
    assert!(epoch >= 1, "epochs are 1-based");
    let halvings = if epoch < config.lr_halve_start {
        0
    } else {
        (epoch - config.lr_halve_start) / config.lr_halve_every.max(1) + 1
    };
    config.lr0 * 0.5f64.powi(halvings.min(1024) as i32)
}
