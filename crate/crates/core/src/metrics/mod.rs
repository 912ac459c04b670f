//! Overlap and surface-distance metrics for tissue segmentations.

mod distance;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::CLASS_NAMES;
use crate::volume::Volume;

/// Classes scored by [`evaluate`], in report order.
pub const TISSUE_CLASSES: [u8; 3] = [1, 2, 3];

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask {
    dims: [usize; 3],
    spacing: [f64; 3],
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], bits: Vec<bool>) -> Result<Self> {
        if dims.contains(&0) || bits.len() != dims.iter().product::<usize>() {
            return Err(Error::Data(format!("mask of {} voxels does not fit dims {dims:?}", bits.len())));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Data(format!("mask spacing {spacing:?} must be positive")));
        }
        Ok(Self { dims, spacing, bits })
    }

    pub fn from_points(dims: [usize; 3], points: &[[usize; 3]]) -> Result<Self> {
        let mut bits = vec![false; dims.iter().product()];
        for p in points {
            if (0..3).any(|a| p[a] >= dims[a]) {
                return Err(Error::Data(format!("point {p:?} lies outside dims {dims:?}")));
            }
            bits[p[0] + dims[0] * (p[1] + dims[1] * p[2])] = true;
        }
        Self::new(dims, [1.0; 3], bits)
    }

    /// One-vs-rest mask of `class`.
    pub fn from_labels(labels: &Volume<u8>, class: u8) -> Self {
        Self {
            dims: labels.dims(),
            spacing: labels.spacing().map(f64::from),
            bits: labels.data().iter().map(|&l| l == class).collect(),
        }
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Result<Self> {
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Data(format!("mask spacing {spacing:?} must be positive")));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, [x, y, z]: [usize; 3]) -> bool {
        self.bits[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Data(format!("mask dims {:?} and {:?} differ", self.dims, other.dims)));
        }
        if self.spacing != other.spacing {
            return Err(Error::Data(format!(
                "mask spacing {:?} and {:?} differ",
                self.spacing, other.spacing
            )));
        }
        Ok(())
    }
}

/// Dice similarity `2|A∩B| / (|A| + |B|)`; two empty masks score 1.
pub fn dsc(reference: &BinaryMask, auto: &BinaryMask) -> Result<f64> {
    reference.check_pair(auto)?;
    let (mut both, mut a, mut b) = (0usize, 0usize, 0usize);
    for (&r, &s) in reference.bits.iter().zip(&auto.bits) {
        a += r as usize;
        b += s as usize;
        both += (r && s) as usize;
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (a + b) as f64)
}

/// Mask voxels with at least one of their six face neighbours outside the
/// mask; the grid edge counts as outside. Returned in index order.
pub fn boundary_voxels(mask: &BinaryMask) -> Result<Vec<[usize; 3]>> {
    let [nx, ny, nz] = mask.dims;
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !mask.get([x, y, z]) {
                    continue;
                }
                let exposed = x == 0
                    || y == 0
                    || z == 0
                    || x + 1 == nx
                    || y + 1 == ny
                    || z + 1 == nz
                    || !mask.get([x - 1, y, z])
                    || !mask.get([x + 1, y, z])
                    || !mask.get([x, y - 1, z])
                    || !mask.get([x, y + 1, z])
                    || !mask.get([x, y, z - 1])
                    || !mask.get([x, y, z + 1]);
                if exposed {
                    out.push([x, y, z]);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(out)
}

/// How the two directed distance lists are combined into one percentile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HausdorffMode {
    /// Maximum of the two directed 95th percentiles.
    #[default]
    PerDirection,
    /// One 95th percentile over both directions' distances pooled.
    Pooled,
}

/// Nearest-rank 95th percentile: element `ceil(0.95·n) − 1` of the sorted list.
pub fn percentile95(mut values: Vec<f64>) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyMask);
    }
    values.sort_by(f64::total_cmp);
    let rank = (95 * values.len()).div_ceil(100);
    Ok(values[rank - 1])
}

fn check_sets(dims: [usize; 3], a: &[[usize; 3]], b: &[[usize; 3]]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    for p in a.iter().chain(b) {
        if (0..3).any(|i| p[i] >= dims[i]) {
            return Err(Error::Data(format!("point {p:?} lies outside dims {dims:?}")));
        }
    }
    Ok(())
}

/// Distance from each point of `from` to the nearest point of `to`, in mm.
pub fn directed_distances(
    dims: [usize; 3],
    spacing: [f64; 3],
    from: &[[usize; 3]],
    to: &[[usize; 3]],
) -> Result<Vec<f64>> {
    check_sets(dims, from, to)?;
    Ok(distance::directed(dims, spacing, from, to))
}

/// 95th-percentile modified Hausdorff distance between two boundary sets.
pub fn mhd95(
    dims: [usize; 3],
    spacing: [f64; 3],
    reference: &[[usize; 3]],
    auto: &[[usize; 3]],
    mode: HausdorffMode,
) -> Result<f64> {
    let forward = directed_distances(dims, spacing, reference, auto)?;
    let backward = directed_distances(dims, spacing, auto, reference)?;
    match mode {
        HausdorffMode::PerDirection => Ok(percentile95(forward)?.max(percentile95(backward)?)),
        HausdorffMode::Pooled => {
            let mut all = forward;
            all.extend(backward);
            percentile95(all)
        }
    }
}

/// Average distance from the reference boundary to the automatic one
/// (directed, so generally `asd(a, b) != asd(b, a)`).
pub fn asd(dims: [usize; 3], spacing: [f64; 3], reference: &[[usize; 3]], auto: &[[usize; 3]]) -> Result<f64> {
    let d = directed_distances(dims, spacing, reference, auto)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Why a class's distances are undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undefined {
    AbsentInBoth,
    AbsentInPrediction,
    AbsentInTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub dsc: f64,
    pub mhd: Option<f64>,
    pub asd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub undefined: Option<Undefined>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hausdorff: HausdorffMode,
    /// CSF, GM, WM in that order.
    pub classes: Vec<ClassMetrics>,
}

impl MetricsReport {
    pub fn get(&self, class: &str) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.class == class)
    }

    pub fn mean_dsc(&self) -> f64 {
        self.classes.iter().map(|c| c.dsc).sum::<f64>() / self.classes.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `class,dsc,mhd,asd` with `NA` for undefined distances.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,dsc,mhd,asd\n");
        let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        for c in &self.classes {
            let _ = writeln!(out, "{},{},{},{}", c.class, c.dsc, cell(c.mhd), cell(c.asd));
        }
        out
    }
}

/// One-vs-rest DSC, MHD95 and ASD per tissue class, with `truth` as the
/// reference.
pub fn evaluate(prediction: &Volume<u8>, truth: &Volume<u8>, mode: HausdorffMode) -> Result<MetricsReport> {
    truth.check_same_grid(prediction, "evaluate")?;
    let dims = truth.dims();
    let spacing = truth.spacing().map(f64::from);
    let mut classes = Vec::new();
    for class in TISSUE_CLASSES {
        let reference = BinaryMask::from_labels(truth, class);
        let auto = BinaryMask::from_labels(prediction, class);
        let overlap = dsc(&reference, &auto)?;
        let undefined = match (reference.count(), auto.count()) {
            (0, 0) => Some(Undefined::AbsentInBoth),
            (_, 0) => Some(Undefined::AbsentInPrediction),
            (0, _) => Some(Undefined::AbsentInTruth),
            _ => None,
        };
        let (mhd, mean) = if undefined.is_some() {
            (None, None)
        } else {
            let rb = boundary_voxels(&reference)?;
            let ab = boundary_voxels(&auto)?;
            (
                Some(mhd95(dims, spacing, &rb, &ab, mode)?),
                Some(asd(dims, spacing, &rb, &ab)?),
            )
        };
        classes.push(ClassMetrics {
            class: CLASS_NAMES[class as usize].to_string(),
            dsc: overlap,
            mhd,
            asd: mean,
            undefined,
        });
    }
    Ok(MetricsReport {
        hausdorff: mode,
        classes,
    })
}
