//! The semi-dense network: every convolutional layer's output is
//! center-cropped and concatenated into the first fully-connected layer.

pub mod checkpoint;
mod config;
mod network;

pub use config::{Fusion, NetworkConfig, CONV_LAYERS};
pub use network::{
    LayerCount, LayerKind, Mode, Network, ParameterCount, RunningStats, BN_MOMENTUM, PRELU_INIT,
};
