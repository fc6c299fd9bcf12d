//! Metric construction and moving-mesh adaptation for 2D triangulations.

pub mod cli;
pub mod error;
pub mod field;
pub mod io;
pub mod levelset;
pub mod mesh;
pub mod metric;
pub mod mmpde;
pub mod monitor;
pub mod quality;

pub use error::{Error, Result};
