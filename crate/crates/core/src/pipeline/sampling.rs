use rand::Rng;

use super::{Subject, TrainConfig};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// One training segment: a target window of `output_side³` voxels lying fully
/// inside its subject, plus the surrounding input context (which may extend
/// past the volume and is then zero-padded).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentSample {
    /// Index into the subject slice the sample was drawn from.
    pub subject: usize,
    /// `(x, y, z)` of the target window's first voxel.
    pub origin: [usize; 3],
}

impl SegmentSample {
    /// `(x, y, z)` of the input window's first voxel, `pad` voxels further out.
    pub fn input_corner(&self, pad: usize) -> [isize; 3] {
        self.origin.map(|o| o as isize - pad as isize)
    }
}

struct Candidates {
    subject: usize,
    foreground: Vec<usize>,
    masked: Vec<usize>,
}

fn candidates(subjects: &[Subject], output_side: usize) -> Result<Vec<Candidates>> {
    let mut out = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        let labels = s.labels()?;
        if s.dims().iter().any(|&d| d < output_side) {
            return Err(Error::Data(format!(
                "subject {}: dims {:?} are smaller than the {output_side}-voxel target window",
                s.id,
                s.dims()
            )));
        }
        let masked: Vec<usize> = (0..s.mask.len()).filter(|&v| s.mask.data()[v] != 0).collect();
        if masked.is_empty() {
            log::warn!("subject {}: empty mask, skipped for sampling", s.id);
            continue;
        }
        let foreground = masked.iter().copied().filter(|&v| labels.data()[v] != 0).collect();
        out.push(Candidates {
            subject: i,
            foreground,
            masked,
        });
    }
    if out.is_empty() {
        return Err(Error::Data("no subject has a non-empty mask".into()));
    }
    Ok(out)
}

/// Draws `n` segments: a subject uniformly, then a centre voxel that is a
/// non-background voxel with probability `foreground_center_fraction` and
/// any masked voxel otherwise. Windows that would cross the volume edge are
/// shifted inwards.
pub fn sample_segments<R: Rng + ?Sized>(
    subjects: &[Subject],
    n: usize,
    rng: &mut R,
    config: &TrainConfig,
    output_side: usize,
) -> Result<Vec<SegmentSample>> {
    if n == 0 {
        return Err(Error::Config("at least one segment must be sampled".into()));
    }
    let pools = candidates(subjects, output_side)?;
    let half = output_side / 2;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pool = &pools[rng.random_range(0..pools.len())];
        let subject = &subjects[pool.subject];
        let fg = rng.random_bool(config.foreground_center_fraction);
        let list = if fg && !pool.foreground.is_empty() {
            &pool.foreground
        } else {
            &pool.masked
        };
        let centre = subject.mask.coords(list[rng.random_range(0..list.len())]);
        let dims = subject.dims();
        let origin = std::array::from_fn(|a| centre[a].saturating_sub(half).min(dims[a] - output_side));
        out.push(SegmentSample {
            subject: pool.subject,
            origin,
        });
    }
    Ok(out)
}

/// Copies a `side³` window starting at `corner` (which may be negative or
/// overrun the grid) from both modalities into `out`, zero outside the grid.
/// Layout is `(channel, z, y, x)`.
pub fn extract_input(subject: &Subject, corner: [isize; 3], side: [usize; 3], out: &mut Vec<f32>) {
    let dims = subject.dims();
    for image in [&subject.t1, &subject.t2] {
        let data = image.data();
        for z in 0..side[2] {
            let vz = corner[2] + z as isize;
            for y in 0..side[1] {
                let vy = corner[1] + y as isize;
                let row_ok = (0..dims[2] as isize).contains(&vz) && (0..dims[1] as isize).contains(&vy);
                for x in 0..side[0] {
                    let vx = corner[0] + x as isize;
                    let v = if row_ok && (0..dims[0] as isize).contains(&vx) {
                        data[vx as usize + dims[0] * (vy as usize + dims[1] * vz as usize)]
                    } else {
                        0.0
                    };
                    out.push(v);
                }
            }
        }
    }
}

/// Stacks the inputs and target labels of `samples` into one batch.
pub fn assemble_batch(
    subjects: &[Subject],
    samples: &[SegmentSample],
    output_side: usize,
    pad: usize,
) -> Result<(Tensor<f32>, Vec<u8>)> {
    let side = output_side + 2 * pad;
    let mut input = Vec::with_capacity(samples.len() * 2 * side * side * side);
    let mut labels = Vec::with_capacity(samples.len() * output_side.pow(3));
    for s in samples {
        let subject = &subjects[s.subject];
        extract_input(subject, s.input_corner(pad), [side; 3], &mut input);
        let truth = subject.labels()?;
        for z in 0..output_side {
            for y in 0..output_side {
                for x in 0..output_side {
                    labels.push(truth.get([s.origin[0] + x, s.origin[1] + y, s.origin[2] + z]));
                }
            }
        }
    }
    let tensor = Tensor::new(vec![samples.len(), 2, side, side, side], input)?;
    Ok((tensor, labels))
}
