//! Dense tensors with reverse-mode differentiation, limited to the ops used
//! by the segmentation network.

mod conv;
mod kernels;
mod optim;
mod param;
mod scalar;
mod tape;
mod tensor;

pub use optim::RmsProp;
pub use param::{he_init, ParamId, ParamStore, Parameter};
pub use scalar::Scalar;
pub use tape::{BatchStats, Tape, Var, LOG_CLAMP};
pub use tensor::Tensor;

/// Batch-norm variance floor.
pub const BN_EPS: f64 = 1e-5;

#[cfg(test)]
mod tests;
