use crate::error::{Error, Result};
use crate::volume::Volume;

/// Largest ensemble whose vote counts fit the `u8` count volumes.
pub const MAX_MODELS: usize = u8::MAX as usize;

/// Per-voxel agreement of an ensemble with its fused labels.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementMap {
    pub k: usize,
    /// Votes for the fused label divided by `k`.
    pub agreement: Volume<f32>,
    /// Votes received by each class, in label order.
    pub votes: Vec<Volume<u8>>,
}

impl AgreementMap {
    /// Number of models that voted for the fused label at voxel `v`.
    pub fn winner_votes(&self, v: usize) -> usize {
        votes_from_agreement(self.agreement.data()[v], self.k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fusion {
    pub labels: Volume<u8>,
    pub agreement: AgreementMap,
}

/// Recovers a vote count from an agreement value stored as `votes / k`.
pub fn votes_from_agreement(agreement: f32, k: usize) -> usize {
    ((agreement as f64 * k as f64).round().max(0.0) as usize).min(k)
}

/// Sum of `values` that does not depend on their order.
fn order_free_sum(values: &mut [f32]) -> f64 {
    values.sort_by(f32::total_cmp);
    values.iter().map(|&v| v as f64).sum()
}

/// Fuses K label volumes by majority vote. A tie goes to the tied class with
/// the highest mean probability across models, then to the lowest label.
/// `probabilities[m][c]` is model `m`'s probability volume for class `c`.
pub fn majority_vote(labels: &[Volume<u8>], probabilities: &[Vec<Volume<f32>>]) -> Result<Fusion> {
    let k = labels.len();
    if k == 0 {
        return Err(Error::Config("majority vote needs at least one model".into()));
    }
    if k > MAX_MODELS {
        return Err(Error::Config(format!("at most {MAX_MODELS} models can vote, got {k}")));
    }
    if probabilities.len() != k {
        return Err(Error::shape(
            "majority_vote",
            format!("{k} label volumes but {} probability sets", probabilities.len()),
        ));
    }
    let first = &labels[0];
    let classes = probabilities[0].len();
    if classes == 0 {
        return Err(Error::Config("probability sets are empty".into()));
    }
    for (m, (l, p)) in labels.iter().zip(probabilities).enumerate() {
        first.check_same_grid(l, "majority_vote")?;
        if p.len() != classes {
            return Err(Error::shape(
                "majority_vote",
                format!("model {m} has {} probability volumes, expected {classes}", p.len()),
            ));
        }
        for vol in p {
            first.check_same_grid(vol, "majority_vote")?;
        }
        if let Some(&bad) = l.data().iter().find(|&&c| c as usize >= classes) {
            return Err(Error::Data(format!("model {m} predicts label {bad}, only {classes} classes")));
        }
    }

    let n = first.len();
    let mut fused = Vec::with_capacity(n);
    let mut agreement = Vec::with_capacity(n);
    let mut votes = vec![vec![0u8; n]; classes];
    let mut counts = vec![0usize; classes];
    let mut scratch = Vec::with_capacity(k);
    for v in 0..n {
        counts.fill(0);
        for l in labels {
            counts[l.data()[v] as usize] += 1;
        }
        let top = *counts.iter().max().expect("classes > 0");
        let mut winner = None;
        let mut best = f64::NEG_INFINITY;
        let tied = counts.iter().filter(|&&c| c == top).count();
        for c in 0..classes {
            if counts[c] != top {
                continue;
            }
            if tied == 1 {
                winner = Some(c);
                break;
            }
            scratch.clear();
            scratch.extend(probabilities.iter().map(|p| p[c].data()[v]));
            let mass = order_free_sum(&mut scratch);
            if winner.is_none() || mass > best {
                winner = Some(c);
                best = mass;
            }
        }
        let winner = winner.expect("some class has the top count");
        fused.push(winner as u8);
        agreement.push(top as f32 / k as f32);
        for (c, &count) in counts.iter().enumerate() {
            votes[c][v] = count as u8;
        }
    }
    Ok(Fusion {
        labels: first.like(fused)?,
        agreement: AgreementMap {
            k,
            agreement: first.like(agreement)?,
            votes: votes.into_iter().map(|v| first.like(v)).collect::<Result<_>>()?,
        },
    })
}

/// Voxel-wise mean of the models' class probabilities, summed in a fixed
/// order independent of the model order.
pub fn mean_probabilities(probabilities: &[Vec<Volume<f32>>]) -> Result<Vec<Volume<f32>>> {
    let Some(first) = probabilities.first() else {
        return Err(Error::Config("no probability sets to average".into()));
    };
    let k = probabilities.len();
    for (m, p) in probabilities.iter().enumerate() {
        if p.len() != first.len() {
            return Err(Error::shape(
                "mean_probabilities",
                format!("model {m} has {} probability volumes, expected {}", p.len(), first.len()),
            ));
        }
        for (vol, reference) in p.iter().zip(first) {
            reference.check_same_grid(vol, "mean_probabilities")?;
        }
    }
    let mut scratch = Vec::with_capacity(k);
    (0..first.len())
        .map(|c| {
            let data = (0..first[c].len())
                .map(|v| {
                    scratch.clear();
                    scratch.extend(probabilities.iter().map(|p| p[c].data()[v]));
                    (order_free_sum(&mut scratch) / k as f64) as f32
                })
                .collect();
            first[c].like(data)
        })
        .collect()
}
