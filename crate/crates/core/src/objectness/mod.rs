//! Soft objectness maps from point annotations.
//!
//! Seeds are flooded outwards over the pixel graph with a min-heap keyed by
//! cumulative squared intensity difference, giving every pixel a distance
//! to its claiming seed. Distances become objectness `exp(-w d)`, and pixels
//! on the border between two grown regions become hard background labels.

pub(crate) mod assemble;
mod grow;
mod reference;
mod seeds;

pub use assemble::{
    assemble_class_maps, distance_to_objectness, extract_boundaries, generate_objectness,
    ObjectnessConfig, ObjectnessMap, DEFAULT_W,
};
pub use grow::{grow_regions, GrowthResult};
pub use reference::dijkstra_reference;
pub use seeds::{Seed, SeedSet};
