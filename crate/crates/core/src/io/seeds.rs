//! Seed CSV: header `x,y,class` (2D) or `x,y,z,class` (3D), 0-based integer
//! coordinates with `x` = column, `y` = row, `z` = slice. Instance ids follow
//! row order.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Coord;
use crate::objectness::{Seed, SeedSet};

use super::read_bytes;

fn columns(rank: usize) -> &'static [&'static str] {
    if rank == 3 {
        &["x", "y", "z", "class"]
    } else {
        &["x", "y", "class"]
    }
}

/// Parses seeds for a grid of `shape`. `num_classes` defaults to the largest
/// class in the file plus one.
pub fn read_seeds(path: &Path, shape: &[usize], num_classes: Option<usize>) -> Result<SeedSet> {
    let bytes = read_bytes(path)?;
    parse_seeds(&bytes, path, shape, num_classes)
}

fn parse_seeds(
    bytes: &[u8],
    path: &Path,
    shape: &[usize],
    num_classes: Option<usize>,
) -> Result<SeedSet> {
    let rank = shape.len();
    let expected = columns(rank);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::format(path, format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    if header != expected {
        let hint = if rank == 3 && header == columns(2) {
            " (the image is a volume: a z column is required)"
        } else {
            ""
        };
        return Err(Error::Invalid(format!(
            "{}: header {:?} does not match expected {:?}{}",
            path.display(),
            header.join(","),
            expected.join(","),
            hint
        )));
    }

    let mut seeds = Vec::new();
    let mut seen = HashSet::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let invalid = |m: String| {
            Error::Invalid(format!(
                "{}: row {} (line {}): {}",
                path.display(),
                row,
                row + 1,
                m
            ))
        };
        let record = record.map_err(|e| invalid(e.to_string()))?;
        let mut vals = Vec::with_capacity(rank + 1);
        for (field, name) in record.iter().zip(expected) {
            let v: usize = field
                .parse()
                .map_err(|_| invalid(format!("{name} {field:?} is not a non-negative integer")))?;
            vals.push(v);
        }
        // file order x, y[, z]; grid order [z,] y, x
        let mut idx: Vec<usize> = vals[..rank].to_vec();
        idx.reverse();
        let class_id = vals[rank];
        if class_id == 0 {
            return Err(invalid("class 0 is reserved for background".into()));
        }
        if let Some(axis) = (0..rank).find(|&a| idx[a] >= shape[a]) {
            return Err(invalid(format!(
                "{} = {} outside image extent {}",
                expected[rank - 1 - axis],
                idx[axis],
                shape[axis]
            )));
        }
        let location = Coord::new(&idx);
        if !seen.insert(location) {
            return Err(invalid(format!(
                "duplicate seed location {:?}",
                vals[..rank].to_vec()
            )));
        }
        seeds.push(Seed {
            location,
            class_id,
            instance_id: k,
        });
    }

    let max_class = seeds.iter().map(|s| s.class_id).max().unwrap_or(1);
    let num_classes = num_classes.unwrap_or(max_class + 1).max(2);
    if max_class >= num_classes {
        return Err(Error::Invalid(format!(
            "{}: class {} exceeds the {} classes requested",
            path.display(),
            max_class,
            num_classes
        )));
    }
    SeedSet::new(seeds, num_classes)
}

pub fn write_seeds(s: &SeedSet, path: &Path) -> Result<()> {
    super::write_atomic(path, &encode_seeds(s)?)
}

pub fn encode_seeds(s: &SeedSet) -> Result<Vec<u8>> {
    let rank = s.seeds().first().map_or(2, |s| s.location.rank());
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(columns(rank)).map_err(to_err)?;
    for seed in s.seeds() {
        let mut row: Vec<String> = seed
            .location
            .indices()
            .iter()
            .rev()
            .map(|v| v.to_string())
            .collect();
        row.push(seed.class_id.to_string());
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}
