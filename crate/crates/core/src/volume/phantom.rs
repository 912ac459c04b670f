//! Synthetic isointense head phantoms.
//!
//! Tissue is laid out as nested shells of a perturbed ellipsoid: CSF outside,
//! then gray matter, with white matter in the core and CSF pockets for
//! ventricles. Smooth random fields bend every interface. Gray and white
//! matter have almost the same T1-like mean but separate in the T2-like
//! channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Volume;
use crate::error::{Error, Result};
use crate::pipeline::{Subject, NUM_CLASSES};

/// Every class must cover at least this fraction of the grid.
pub const MIN_CLASS_FRACTION: f64 = 0.02;
const MAX_ATTEMPTS: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub dims: [usize; 3],
    pub spacing: [f32; 3],
    pub seed: u64,
    /// Class means (background, CSF, GM, WM) of the T1-like image.
    pub t1_means: [f32; 4],
    /// Class means (background, CSF, GM, WM) of the T2-like image.
    pub t2_means: [f32; 4],
    pub noise_std: f32,
    /// Gaussian bumps summed into each smooth random field.
    pub blobs: usize,
    /// Bump width as a fraction of the smallest dimension.
    pub smoothness: f32,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            dims: [64, 64, 64],
            spacing: [1.0; 3],
            seed: 0,
            t1_means: [0.0, 0.25, 0.58, 0.62],
            t2_means: [0.0, 1.0, 0.62, 0.36],
            noise_std: 0.1,
            blobs: 24,
            smoothness: 0.15,
        }
    }
}

impl PhantomConfig {
    /// |GM − WM| in the T1-like channel.
    pub fn t1_gap(&self) -> f32 {
        (self.t1_means[2] - self.t1_means[3]).abs()
    }

    /// |GM − WM| in the T2-like channel.
    pub fn t2_gap(&self) -> f32 {
        (self.t2_means[2] - self.t2_means[3]).abs()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 8) {
            return Err(Error::Config(format!("phantom dims {:?} must be at least 8 per axis", self.dims)));
        }
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config(format!("phantom spacing {:?} must be positive", self.spacing)));
        }
        if self.t1_means.iter().chain(&self.t2_means).any(|m| !m.is_finite()) {
            return Err(Error::Config("phantom class means must be finite".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise std {} must be finite and non-negative", self.noise_std)));
        }
        if self.blobs == 0 || !(self.smoothness.is_finite() && self.smoothness > 0.0) {
            return Err(Error::Config("phantom needs at least one blob and a positive smoothness".into()));
        }
        Ok(())
    }
}

/// Sum of random Gaussian bumps, scaled to a peak magnitude of 1.
fn smooth_field(dims: [usize; 3], blobs: usize, sigma: f32, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let [nx, ny, nz] = dims;
    let mut field = vec![0f32; nx * ny * nz];
    let profile = |n: usize, c: f32| -> Vec<f32> {
        (0..n)
            .map(|i| {
                let d = (i as f32 - c) / sigma;
                (-0.5 * d * d).exp()
            })
            .collect()
    };
    for _ in 0..blobs {
        let amp: f32 = rng.random_range(-1.0..1.0);
        let c: [f32; 3] = std::array::from_fn(|a| rng.random_range(0.0..dims[a] as f32));
        let (px, py, pz) = (profile(nx, c[0]), profile(ny, c[1]), profile(nz, c[2]));
        for z in 0..nz {
            for y in 0..ny {
                let s = amp * py[y] * pz[z];
                let row = &mut field[(z * ny + y) * nx..][..nx];
                for (v, &fx) in row.iter_mut().zip(&px) {
                    *v += s * fx;
                }
            }
        }
    }
    let peak = field.iter().fold(0f32, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        field.iter_mut().for_each(|v| *v /= peak);
    }
    field
}

fn layout(config: &PhantomConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let dims = config.dims;
    let sigma = config.smoothness * *dims.iter().min().unwrap() as f32;
    let outline = smooth_field(dims, config.blobs, sigma, rng);
    let interface = smooth_field(dims, config.blobs, sigma, rng);
    let ventricles = smooth_field(dims, config.blobs, sigma, rng);
    let center: [f32; 3] = std::array::from_fn(|a| (dims[a] as f32 - 1.0) / 2.0);
    let radius: [f32; 3] = std::array::from_fn(|a| 0.46 * dims[a] as f32);
    let [nx, ny, nz] = dims;
    let mut labels = vec![0u8; nx * ny * nz];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                let p = [x as f32, y as f32, z as f32];
                let rho = (0..3).map(|a| ((p[a] - center[a]) / radius[a]).powi(2)).sum::<f32>().sqrt();
                let depth = 1.0 - rho + 0.12 * outline[i];
                labels[i] = if depth < 0.0 {
                    0
                } else if depth < 0.16 || (depth > 0.45 && ventricles[i] > 0.55) {
                    1
                } else if depth + 0.15 * interface[i] < 0.38 {
                    2
                } else {
                    3
                };
            }
        }
    }
    labels
}

fn class_fractions(labels: &[u8]) -> [f64; NUM_CLASSES] {
    let mut counts = [0usize; NUM_CLASSES];
    for &l in labels {
        counts[l as usize] += 1;
    }
    counts.map(|c| c as f64 / labels.len() as f64)
}

/// Generates one phantom subject. A layout in which some class covers less
/// than [`MIN_CLASS_FRACTION`] of the grid is redrawn from a derived seed, at
/// most ten times in total.
pub fn generate_phantom(config: &PhantomConfig, id: impl Into<String>) -> Result<Subject> {
    generate_with_floor(config, id.into(), MIN_CLASS_FRACTION)
}

pub(super) fn generate_with_floor(config: &PhantomConfig, id: String, floor: f64) -> Result<Subject> {
    config.validate()?;
    let mut last = [0.0; NUM_CLASSES];
    for attempt in 0..MAX_ATTEMPTS {
        let seed = config.seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = layout(config, &mut rng);
        last = class_fractions(&labels);
        if last.iter().any(|&f| f < floor) {
            log::warn!("phantom seed {seed}: class fractions {last:?} below floor, redrawing");
            continue;
        }
        let noise = Normal::new(0.0f32, config.noise_std).expect("validated noise std");
        let mut image = |means: &[f32; 4]| -> Vec<f32> {
            labels.iter().map(|&l| means[l as usize] + noise.sample(&mut rng)).collect()
        };
        let t1 = image(&config.t1_means);
        let t2 = image(&config.t2_means);
        let mask: Vec<u8> = labels.iter().map(|&l| u8::from(l != 0)).collect();
        let dims = config.dims;
        let sp = config.spacing;
        return Subject::new(
            id,
            Volume::new(dims, sp, t1)?,
            Volume::new(dims, sp, t2)?,
            Some(Volume::new(dims, sp, labels)?),
            Volume::new(dims, sp, mask)?,
        );
    }
    Err(Error::Data(format!(
        "phantom seed {}: no layout with every class above {floor} after {MAX_ATTEMPTS} attempts (last fractions {last:?})",
        config.seed
    )))
}

/// Per-voxel nearest class mean on a single channel; ties go to the lower
/// class index.
pub fn nearest_mean_labels(image: &Volume<f32>, means: &[f32; 4]) -> Volume<u8> {
    image.map(|v| {
        let mut best = 0;
        for c in 1..means.len() {
            if (v - means[c]).abs() < (v - means[best]).abs() {
                best = c;
            }
        }
        best as u8
    })
}
