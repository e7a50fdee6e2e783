//! Numerical core of the defectforge pipeline.
//!
//! Everything in this crate is pure computation over in-memory values:
//! tensors and hand-written CNN kernels, image preprocessing, annotation
//! geometry, classification metrics, dataset splitting, the training loop,
//! and the procedural defect generator. File formats, checkpoints and the
//! command line live in the `defectforge` crate.

#![no_std]

extern crate alloc;

pub mod annotations;
pub mod imaging;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod split;
pub mod synth;
pub mod tensor;
pub mod train;

pub use annotations::{Annotation, BBox, ClassMap, LabeledPatch, Object};
pub use imaging::RasterImage;
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use nn::{LayerSpec, Model};
pub use tensor::Tensor;
