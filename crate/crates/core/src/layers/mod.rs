//! Primitive layers shared by every network block.

mod activation;
mod conv;
mod norm;
mod pool;
mod resample;
mod sobel;

pub use activation::{activation, sigmoid, silu, Activation};
pub use conv::{conv2d, ConvParams};
pub use norm::{batchnorm_inference, BnParams, DEFAULT_BN_EPS};
pub use pool::{global_avg_pool, maxpool1d};
pub use resample::{sample_bilinear_zero, upsample, UpsampleMode};
pub use sobel::{sobel, sobel_components};
