use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::{Coord, Grid};

/// An annotated point. Class 0 is reserved for background.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed {
    pub location: Coord,
    pub class_id: usize,
    pub instance_id: usize,
}

/// Ordered seed list. Order breaks ties between equally distant claims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<Seed>,
    num_classes: usize,
}

impl SeedSet {
    pub fn new(seeds: Vec<Seed>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes (background + 1), got {num_classes}"
            )));
        }
        let mut ids = HashSet::new();
        for (row, s) in seeds.iter().enumerate() {
            if s.class_id == 0 || s.class_id >= num_classes {
                return Err(Error::invalid(format!(
                    "seed {row}: class {} outside foreground range 1..{}",
                    s.class_id,
                    num_classes - 1
                )));
            }
            if !ids.insert(s.instance_id) {
                return Err(Error::invalid(format!(
                    "seed {row}: duplicate instance id {}",
                    s.instance_id
                )));
            }
        }
        Ok(SeedSet { seeds, num_classes })
    }

    /// Seeds numbered by position, all in `num_classes`.
    pub fn from_points(points: &[(Coord, usize)], num_classes: usize) -> Result<Self> {
        let seeds = points
            .iter()
            .enumerate()
            .map(|(k, &(location, class_id))| Seed {
                location,
                class_id,
                instance_id: k,
            })
            .collect();
        SeedSet::new(seeds, num_classes)
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Non-empty, in bounds, pairwise distinct locations.
    pub(crate) fn validate_for(&self, g: &Grid) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("seed set is empty"));
        }
        let mut seen = HashSet::new();
        for (row, s) in self.seeds.iter().enumerate() {
            if !g.contains(&s.location) {
                return Err(Error::invalid(format!(
                    "seed {row}: location {:?} outside grid {:?}",
                    s.location,
                    g.shape()
                )));
            }
            if !seen.insert(s.location) {
                return Err(Error::invalid(format!(
                    "seed {row}: duplicate location {:?}",
                    s.location
                )));
            }
        }
        Ok(())
    }
}
