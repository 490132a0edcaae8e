//! Video forgery localization from coding-trace self-consistency.
//!
//! The pipeline trains two small grid-aligned CNN classifiers on
//! synthetically encoded 64x64 luma patches (codec flavor and quality level),
//! then localizes forgeries by checking descriptor consistency: temporal
//! splices appear as spikes in the adjacent-frame descriptor distance series,
//! spatial splices as concentrated regions in a fused activation heatmap.

pub mod codec;
pub mod config;
pub mod dataset;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod harness;
pub mod manifest;
pub mod nn;
pub mod patching;
pub mod spatial;
pub mod temporal;
pub mod trainer;
pub mod video;

pub use error::{Error, Result};
