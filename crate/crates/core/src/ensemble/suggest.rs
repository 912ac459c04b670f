use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::analysis::{check_k, check_threshold, is_low};
use super::votes_from_agreement;
use crate::error::{Error, Result};
use crate::volume::Volume;

/// Smallest component reported by default.
pub const DEFAULT_MIN_SIZE: usize = 5;

/// A connected low-confidence region proposed for review.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// 1 for the least confident region.
    pub rank: usize,
    pub mean_agreement: f64,
    pub size: usize,
    /// Inclusive `[x0, y0, z0, x1, y1, z1]`.
    pub bbox: [usize; 6],
    pub dominant_class: u8,
    /// `(x, y, z)` in volume index order.
    pub voxels: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestionExport {
    pub volume_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub threshold: f64,
    pub suggestions: Vec<Suggestion>,
}

impl SuggestionExport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("suggestions serialize");
        s.push('\n');
        s
    }

    pub fn parse(json: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(json)?)
    }
}

/// Maximal 6-connected sets of `true` voxels, each listed in index order,
/// components ordered by their first voxel.
pub fn components(dims: [usize; 3], set: &[bool]) -> Vec<Vec<usize>> {
    let [nx, ny, nz] = dims;
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..set.len() {
        if !set[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            let (x, y, z) = (v % nx, (v / nx) % ny, v / (nx * ny));
            let mut visit = |u: usize| {
                if set[u] && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            };
            if x > 0 {
                visit(v - 1);
            }
            if x + 1 < nx {
                visit(v + 1);
            }
            if y > 0 {
                visit(v - nx);
            }
            if y + 1 < ny {
                visit(v + nx);
            }
            if z > 0 {
                visit(v - nx * ny);
            }
            if z + 1 < nz {
                visit(v + nx * ny);
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Connected regions where at most `threshold` of the `k` models agree with
/// the fused label, at least `min_size` voxels each, ranked by ascending mean
/// agreement and then descending size.
pub fn suggest_corrections(
    agreement: &Volume<f32>,
    k: usize,
    fused: &Volume<u8>,
    threshold: f64,
    min_size: usize,
) -> Result<Vec<Suggestion>> {
    check_threshold(threshold)?;
    check_k(k)?;
    fused.check_same_grid(agreement, "suggest_corrections")?;
    if let Some(&bad) = agreement.data().iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Data(format!("agreement value {bad} outside [0, 1]")));
    }
    let votes: Vec<usize> = agreement.data().iter().map(|&a| votes_from_agreement(a, k)).collect();
    let low: Vec<bool> = votes.iter().map(|&v| is_low(v, k, threshold)).collect();
    let mut found: Vec<(usize, usize, Suggestion)> = components(fused.dims(), &low)
        .into_iter()
        .filter(|c| c.len() >= min_size.max(1))
        .map(|comp| {
            let total_votes: usize = comp.iter().map(|&v| votes[v]).sum();
            let mut classes = [0usize; 256];
            let mut bbox = [usize::MAX, usize::MAX, usize::MAX, 0, 0, 0];
            let voxels: Vec<[usize; 3]> = comp
                .iter()
                .map(|&v| {
                    classes[fused.data()[v] as usize] += 1;
                    let p = fused.coords(v);
                    for a in 0..3 {
                        bbox[a] = bbox[a].min(p[a]);
                        bbox[a + 3] = bbox[a + 3].max(p[a]);
                    }
                    p
                })
                .collect();
            let top = *classes.iter().max().expect("nonempty");
            let dominant = classes.iter().position(|&c| c == top).expect("present") as u8;
            let suggestion = Suggestion {
                rank: 0,
                mean_agreement: total_votes as f64 / (k * comp.len()) as f64,
                size: comp.len(),
                bbox,
                dominant_class: dominant,
                voxels,
            };
            (total_votes, comp[0], suggestion)
        })
        .collect();
    // compare mean agreements as exact fractions of votes
    found.sort_by(|(va, fa, a), (vb, fb, b)| {
        (va * b.size)
            .cmp(&(vb * a.size))
            .then(b.size.cmp(&a.size))
            .then(fa.cmp(fb))
    });
    Ok(found
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut s))| {
            s.rank = i + 1;
            s
        })
        .collect())
}
