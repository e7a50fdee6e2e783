//! File formats, dataset layout, and the command line for defectforge.
//!
//! The numerical work lives in `defectforge_core`; this crate reads and
//! writes Pascal-VOC annotations, PNM images, checkpoints and CSV logs,
//! and drives the pipeline from the `defectforge` binary.

pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod parallel;
pub mod voc;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, TrainingMeta};
pub use error::Error;
pub use voc::{parse_voc_xml, write_voc_xml, VocError};
