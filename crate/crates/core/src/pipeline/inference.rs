use super::sampling::extract_input;
use super::{Subject, NUM_CLASSES};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::net::Network;
use crate::volume::Volume;

/// Side of the output tiles that partition a volume during dense inference.
pub const TILE: usize = 9;
/// Tiles per axis evaluated together in one forward pass by default.
pub const DEFAULT_BLOCK_TILES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    /// One probability volume per class, in label order.
    pub probabilities: Vec<Volume<f32>>,
    /// Per-voxel argmax, forced to background outside the mask.
    pub labels: Volume<u8>,
}

/// Origins `(x, y, z)` of the output tiles covering `dims`. Tiles on the far
/// faces may overhang the volume when a side is not a multiple of the tile.
pub fn tile_origins(dims: [usize; 3], tile: usize) -> Vec<[usize; 3]> {
    let counts = dims.map(|d| d.div_ceil(tile));
    let mut out = Vec::with_capacity(counts.iter().product());
    for z in 0..counts[2] {
        for y in 0..counts[1] {
            for x in 0..counts[0] {
                out.push([x * tile, y * tile, z * tile]);
            }
        }
    }
    out
}

/// Whole-volume inference with the default block size.
pub fn dense_inference(net: &Network, subject: &Subject) -> Result<Segmentation> {
    dense_inference_blocked(net, subject, DEFAULT_BLOCK_TILES)
}

/// Classifies every voxel exactly once. The volume is conceptually
/// zero-padded by half the network's shrink on every face and cut into
/// [`TILE`]³ output tiles; `block_tiles`³ neighbouring tiles share one forward
/// pass. Every kernel computes each output voxel independently of the window
/// it sits in, so the result does not depend on `block_tiles`.
pub fn dense_inference_blocked(net: &Network, subject: &Subject, block_tiles: usize) -> Result<Segmentation> {
    let dims = subject.dims();
    if dims.iter().any(|&d| d < TILE) {
        return Err(Error::Data(format!(
            "subject {}: dims {dims:?} are smaller than the {TILE}³ output tile",
            subject.id
        )));
    }
    if block_tiles == 0 {
        return Err(Error::Config("block_tiles must be positive".into()));
    }
    if net.config().modalities != 2 {
        return Err(Error::Config(format!(
            "subjects carry two modalities, the network expects {}",
            net.config().modalities
        )));
    }
    let classes = net.config().num_classes;
    if classes != NUM_CLASSES {
        return Err(Error::Config(format!(
            "tissue labels need {NUM_CLASSES} classes, the network predicts {classes}"
        )));
    }
    let pad = net.config().shrink() / 2;
    let n = dims.iter().product::<usize>();
    let mut probs = vec![vec![0f32; n]; classes];
    let block = TILE * block_tiles;
    for origin in tile_origins(dims, block) {
        // shrink the block to the tiles that still overlap the volume
        let side: [usize; 3] = std::array::from_fn(|a| (dims[a] - origin[a]).div_ceil(TILE).min(block_tiles) * TILE);
        let corner = origin.map(|o| o as isize - pad as isize);
        let in_side = side.map(|s| s + 2 * pad);
        let mut input = Vec::with_capacity(2 * in_side.iter().product::<usize>());
        extract_input(subject, corner, in_side, &mut input);
        let tensor = Tensor::new(vec![1, 2, in_side[2], in_side[1], in_side[0]], input)?;
        let out = net.predict(tensor)?;
        let data = out.data();
        let plane = side[0] * side[1];
        let vol = plane * side[2];
        for z in 0..side[2].min(dims[2] - origin[2]) {
            for y in 0..side[1].min(dims[1] - origin[1]) {
                for x in 0..side[0].min(dims[0] - origin[0]) {
                    let v = (origin[0] + x) + dims[0] * ((origin[1] + y) + dims[1] * (origin[2] + z));
                    let o = z * plane + y * side[0] + x;
                    for (c, p) in probs.iter_mut().enumerate() {
                        p[v] = data[c * vol + o];
                    }
                }
            }
        }
    }
    let labels: Vec<u8> = (0..n)
        .map(|v| {
            if subject.mask.data()[v] == 0 {
                return 0;
            }
            let mut best = 0;
            for c in 1..classes {
                if probs[c][v] > probs[best][v] {
                    best = c;
                }
            }
            best as u8
        })
        .collect();
    Ok(Segmentation {
        labels: subject.t1.like(labels)?,
        probabilities: probs
            .into_iter()
            .map(|p| subject.t1.like(p))
            .collect::<Result<_>>()?,
    })
}
