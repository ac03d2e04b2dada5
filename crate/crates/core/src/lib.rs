//! Complexity-factor profiling, dataset ablation and evaluation for
//! instance-segmentation datasets.

pub mod ablation;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod object_factors;
pub mod profile;
pub mod raster;
pub mod report;
pub mod scene;
pub mod scene_factors;
pub mod seed;
pub mod synth;
pub mod textures;

pub use error::{Error, Result};
