//! Semi-dense 3D fully convolutional networks for isointense infant brain
//! tissue segmentation, with ensemble agreement maps and correction
//! suggestions.

pub mod autodiff;
mod bytes;
pub mod ensemble;
mod error;
pub mod metrics;
pub mod net;
pub mod pipeline;
pub mod volume;

pub use error::{Error, Result};
