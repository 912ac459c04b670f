use serde::{Deserialize, Serialize};

use super::AgreementMap;
use crate::error::{Error, Result};
use crate::metrics::TISSUE_CLASSES;
use crate::pipeline::CLASS_NAMES;
use crate::volume::Volume;

/// Agreement at or below which a voxel counts as low confidence.
pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// Masked voxels split by ensemble agreement.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidencePartition {
    pub dims: [usize; 3],
    pub low: Vec<bool>,
    pub high: Vec<bool>,
}

impl ConfidencePartition {
    pub fn low_count(&self) -> usize {
        self.low.iter().filter(|&&b| b).count()
    }

    pub fn high_count(&self) -> usize {
        self.high.iter().filter(|&&b| b).count()
    }

    /// Share of the masked voxels that are low confidence, in `[0, 1]`.
    pub fn low_fraction(&self) -> f64 {
        let total = self.low_count() + self.high_count();
        if total == 0 {
            0.0
        } else {
            self.low_count() as f64 / total as f64
        }
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} must lie strictly between 0 and 1")));
    }
    Ok(())
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("an ensemble needs at least one model".into()));
    }
    Ok(())
}

/// True when `votes` out of `k` is at or below `threshold`. The comparison
/// is done on vote counts so 6 of 10 sits exactly on a 0.6 threshold.
pub fn is_low(votes: usize, k: usize, threshold: f64) -> bool {
    votes as f64 <= threshold * k as f64 + 1e-9
}

/// Splits the masked voxels into `low` (agreement ≤ `threshold`) and `high`.
pub fn partition_confidence(
    agreement: &AgreementMap,
    fused: &Volume<u8>,
    mask: &Volume<u8>,
    threshold: f64,
) -> Result<ConfidencePartition> {
    check_threshold(threshold)?;
    check_k(agreement.k)?;
    fused.check_same_grid(&agreement.agreement, "partition_confidence")?;
    fused.check_same_grid(mask, "partition_confidence")?;
    let n = fused.len();
    let mut low = vec![false; n];
    let mut high = vec![false; n];
    for v in 0..n {
        if mask.data()[v] == 0 {
            continue;
        }
        if is_low(agreement.winner_votes(v), agreement.k, threshold) {
            low[v] = true;
        } else {
            high[v] = true;
        }
    }
    Ok(ConfidencePartition {
        dims: fused.dims(),
        low,
        high,
    })
}

/// Pearson correlation of two binary indicators given their joint counts;
/// `None` when either indicator is constant.
pub fn indicator_correlation(n: u64, x: u64, y: u64, xy: u64) -> Option<f64> {
    let n = n as f64;
    let (x, y, xy) = (x as f64, y as f64, xy as f64);
    let vx = n * x - x * x;
    let vy = n * y - y * y;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((n * xy - x * y) / (vx * vy).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCorrelation {
    pub class: String,
    pub high: Option<f64>,
    pub low: Option<f64>,
    /// Share of masked voxels in each region, in percent.
    pub high_percent: f64,
    pub low_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub classes: Vec<ClassCorrelation>,
}

impl CorrelationReport {
    pub fn get(&self, class: &str) -> Option<&ClassCorrelation> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Per tissue class and region, the correlation between "predicted as the
/// class" and "is the class".
pub fn confidence_error_correlation(
    fused: &Volume<u8>,
    truth: &Volume<u8>,
    partition: &ConfidencePartition,
) -> Result<CorrelationReport> {
    fused.check_same_grid(truth, "confidence_error_correlation")?;
    if partition.dims != fused.dims() {
        return Err(Error::Data(format!(
            "confidence_error_correlation: partition dims {:?} and labels {:?} differ",
            partition.dims,
            fused.dims()
        )));
    }
    let low_n = partition.low_count();
    let high_n = partition.high_count();
    let total = (low_n + high_n).max(1) as f64;
    let region = |set: &[bool], class: u8| {
        let (mut n, mut x, mut y, mut xy) = (0u64, 0u64, 0u64, 0u64);
        for ((&inside, &p), &t) in set.iter().zip(fused.data()).zip(truth.data()) {
            if !inside {
                continue;
            }
            let px = p == class;
            let ty = t == class;
            n += 1;
            x += px as u64;
            y += ty as u64;
            xy += (px && ty) as u64;
        }
        indicator_correlation(n, x, y, xy)
    };
    let classes = TISSUE_CLASSES
        .iter()
        .map(|&class| ClassCorrelation {
            class: CLASS_NAMES[class as usize].to_string(),
            high: region(&partition.high, class),
            low: region(&partition.low, class),
            high_percent: 100.0 * high_n as f64 / total,
            low_percent: 100.0 * low_n as f64 / total,
        })
        .collect();
    Ok(CorrelationReport { classes })
}

/// Agreement histograms for the voxels of one true tissue class. Bin `i`
/// holds the voxels whose fused label received `i + 1` of the `k` votes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: String,
    pub correct: Vec<u64>,
    pub incorrect: Vec<u64>,
}

impl ClassHistogram {
    /// Agreement value of bin `i`.
    pub fn bin_agreement(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.correct.len() as f64
    }

    /// Index of the fullest bin of `counts`, the highest agreement on ties.
    pub fn modal_bin(counts: &[u64]) -> Option<usize> {
        let max = *counts.iter().max()?;
        if max == 0 {
            return None;
        }
        counts.iter().rposition(|&c| c == max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceHistograms {
    pub k: usize,
    pub classes: Vec<ClassHistogram>,
}

/// Agreement distribution of correctly and incorrectly labelled voxels,
/// grouped by their true tissue class.
pub fn confidence_histograms(
    agreement: &AgreementMap,
    fused: &Volume<u8>,
    truth: &Volume<u8>,
) -> Result<ConfidenceHistograms> {
    fused.check_same_grid(truth, "confidence_histograms")?;
    fused.check_same_grid(&agreement.agreement, "confidence_histograms")?;
    let k = agreement.k;
    check_k(k)?;
    let mut classes: Vec<ClassHistogram> = TISSUE_CLASSES
        .iter()
        .map(|&c| ClassHistogram {
            class: CLASS_NAMES[c as usize].to_string(),
            correct: vec![0; k],
            incorrect: vec![0; k],
        })
        .collect();
    for (v, (&p, &t)) in fused.data().iter().zip(truth.data()).enumerate() {
        let Some(slot) = TISSUE_CLASSES.iter().position(|&c| c == t) else {
            continue;
        };
        let bin = agreement.winner_votes(v).clamp(1, k) - 1;
        let h = &mut classes[slot];
        if p == t {
            h.correct[bin] += 1;
        } else {
            h.incorrect[bin] += 1;
        }
    }
    Ok(ConfidenceHistograms { k, classes })
}
