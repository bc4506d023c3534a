//! Spontaneous versus posed smile classification from facial landmark
//! dynamics and dense optical flow.

pub mod cli;
pub mod data;
pub mod dmarker;
pub mod error;
pub mod eval;
pub mod features;
pub mod flowfeat;
pub mod normalize;
pub mod optflow;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
