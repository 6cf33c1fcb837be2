//! Inference runtime for a compact camera, radar and text visual-grounding
//! network: stand-in encoders, per-level tri-modal fusion, a feature
//! pyramid with edge/neighbour experts, a center-point box head and a
//! re-parameterizable mask head. Training losses and evaluation metrics
//! are provided with analytic gradients so they can be checked offline.
//!
//! Kernels run on rayon when the `parallel` feature is enabled (default)
//! and fall back to plain loops otherwise; results are bitwise identical
//! either way.

pub mod archive;
pub mod block;
pub mod config;
pub mod encoders;
pub mod enmoe;
pub mod error;
mod exec;
pub mod fixtures;
pub mod fpn;
pub mod heads;
pub mod layers;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod params;
pub mod raster;
pub mod tensor;
pub mod tmdf;
pub mod vocab;

pub use archive::WeightArchive;
pub use config::RunConfig;
pub use encoders::{EncoderConfig, TokenSequence};
pub use error::{ArchiveError, Error, Result};
pub use exec::is_parallel;
pub use heads::{BinaryMask, DetectionBox};
pub use model::{fuse_archive, generate_archive, ModelOutput, NanoMvg, Prediction};
pub use params::InitMode;
pub use tensor::{FeatureMap, Matrix};
pub use vocab::Vocabulary;
