//! Soft objectness maps and background labels from point-annotated
//! microscopy images, plus the weak-supervision loss kernels that consume
//! them and a synthetic evaluation harness.
//!
//! The pipeline: [`preprocess`] conditions intensities, [`objectness`]
//! floods the image from annotated seeds by cumulative squared intensity
//! difference and turns distances into per-class probabilities, [`losses`]
//! scores network predictions against those targets, and [`eval`] measures
//! and tunes the result on generated data.

pub mod error;
pub mod eval;
pub mod field;
pub mod grid;
pub mod io;
pub mod losses;
pub mod objectness;
pub mod preprocess;

pub use error::{Error, Result};
pub use field::ClassField;
pub use grid::{neighbors, normalize_intensity, Connectivity, Coord, Grid};
pub use objectness::{
    generate_objectness, grow_regions, GrowthResult, ObjectnessConfig, ObjectnessMap, Seed, SeedSet,
};
