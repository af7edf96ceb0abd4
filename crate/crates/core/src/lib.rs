//! Photosensor oculography (PSOG) simulator.
//!
//! A procedural eye is rendered for each gaze sample, photosensor detection
//! areas integrate the image, the sensor outputs are combined into raw
//! horizontal/vertical channels and calibrated to degrees. On top of that sit
//! parameter sweeps, a trade-off search and sensor-shift experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli_io;
pub mod designs;
pub mod error;
pub mod experiments;
pub mod eye_render;
pub mod metrics;
pub mod scene;
pub mod sensing;

pub use error::{Error, Result};
