//! Random walks on HNN extensions G = G₀ *_φ.

pub mod config;
pub mod error;
pub mod estimators;
pub mod exits;
pub mod experiment;
pub mod group;
pub mod stats;
pub mod walk;
pub mod zproj;

pub use error::{Error, Result};
