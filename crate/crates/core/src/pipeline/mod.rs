//! Subjects, segment sampling, the training schedule and dense inference.

mod config;
mod inference;
pub mod manifest;
mod sampling;
mod subject;
mod train;

pub use config::{lr_at_epoch, TrainConfig};
pub use inference::{dense_inference, dense_inference_blocked, tile_origins, Segmentation, DEFAULT_BLOCK_TILES, TILE};
pub use manifest::{load_subjects, DatasetManifest, Split, SubjectEntry};
pub use sampling::{assemble_batch, extract_input, sample_segments, SegmentSample};
pub use subject::{normalize_intensities, Subject, CLASS_NAMES, NUM_CLASSES};
pub use train::{train, EpochRecord, History, SubepochRecord};

#[cfg(test)]
mod tests;
