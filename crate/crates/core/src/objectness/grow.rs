use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::grid::{Connectivity, Coord, Grid, Lattice};

use super::SeedSet;

#[inline]
pub(crate) fn edge_cost(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-pixel output of the flooding, indexed by linear pixel index.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthResult {
    lattice: Lattice,
    distance: Vec<f64>,
    identifier: Vec<usize>,
    parent: Vec<usize>,
    seed_class: Vec<usize>,
}

impl GrowthResult {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shape(&self) -> &[usize] {
        self.lattice.shape()
    }

    /// Cumulative squared intensity difference from the claiming seed.
    pub fn distance(&self) -> &[f64] {
        &self.distance
    }

    /// Instance id of the claiming seed.
    pub fn identifier(&self) -> &[usize] {
        &self.identifier
    }

    /// Linear index of the predecessor on the shortest path; seeds point to themselves.
    pub fn parent(&self) -> &[usize] {
        &self.parent
    }

    pub fn parent_coord(&self, c: &Coord) -> Coord {
        self.lattice.coord(self.parent[self.lattice.linear(c)])
    }

    /// Class id of the claiming seed.
    pub fn seed_class(&self) -> &[usize] {
        &self.seed_class
    }
}

#[derive(Clone, Copy)]
struct Entry {
    dist: f64,
    order: u64,
    node: usize,
    parent: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap, we want smallest (dist, order) on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.order.cmp(&self.order))
    }
}

const UNSET: usize = usize::MAX;

/// Multi-source label-setting flood from the seeds.
///
/// The heap is ordered by cumulative distance, then by insertion order, so
/// equal-distance entries pop first-in first-out. A pixel is finalized the
/// first time it is popped; later entries for it are stale and skipped. A
/// neighbour is only re-pushed when the new path is strictly shorter, so the
/// earliest claim wins ties.
pub fn grow_regions(g: &Grid, s: &SeedSet, conn: Connectivity) -> Result<GrowthResult> {
    s.validate_for(g)?;
    let lattice = g.lattice().clone();
    let n = lattice.len();
    let offsets = lattice.offsets(conn);

    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![UNSET; n];
    let mut identifier = vec![UNSET; n];
    let mut seed_class = vec![0usize; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(n);
    let mut order = 0u64;

    for seed in s.seeds() {
        let p = lattice.linear(&seed.location);
        best[p] = 0.0;
        parent[p] = p;
        identifier[p] = seed.instance_id;
        seed_class[p] = seed.class_id;
        heap.push(Entry {
            dist: 0.0,
            order,
            node: p,
            parent: p,
        });
        order += 1;
    }

    while let Some(e) = heap.pop() {
        if done[e.node] {
            continue;
        }
        let p = e.node;
        done[p] = true;
        if e.parent != p {
            parent[p] = e.parent;
            identifier[p] = identifier[e.parent];
            seed_class[p] = seed_class[e.parent];
        }
        let dp = e.dist;
        let ip = g.pixel(p);
        lattice.for_each_neighbor(p, &offsets, |q| {
            if done[q] {
                return;
            }
            let dq = dp + edge_cost(ip, g.pixel(q));
            if dq < best[q] {
                best[q] = dq;
                heap.push(Entry {
                    dist: dq,
                    order,
                    node: q,
                    parent: p,
                });
                order += 1;
            }
        });
    }

    Ok(GrowthResult {
        lattice,
        distance: best,
        identifier,
        parent,
        seed_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn row(vals: &[f64]) -> Grid {
        Grid::new(&[1, vals.len()], 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn one_by_three_hand_example() {
        let g = row(&[0.0, 0.1, 0.4]);
        let s = SeedSet::from_points(&[([0, 0].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        for (a, b) in r.distance().iter().zip([0.0, 0.01, 0.10]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(r.identifier(), &[0, 0, 0]);
        assert_eq!(r.parent(), &[0, 0, 1]);
        assert_eq!(r.seed_class(), &[1, 1, 1]);
    }

    #[test]
    fn seeds_are_roots() {
        let g = row(&[0.3, 0.9, 0.1, 0.5, 0.7]);
        let s = SeedSet::from_points(&[([0, 1].into(), 1), ([0, 3].into(), 2)], 3).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        for seed in s.seeds() {
            let p = g.lattice().linear(&seed.location);
            assert_eq!(r.distance()[p], 0.0);
            assert_eq!(r.parent()[p], p);
            assert_eq!(r.identifier()[p], seed.instance_id);
        }
    }

    #[test]
    fn fifo_tie_break_on_constant_image() {
        let g = Grid::filled(&[2, 2], 1, 0.5).unwrap();
        let s = SeedSet::from_points(&[([0, 0].into(), 1), ([1, 1].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert!(r.distance().iter().all(|&d| d == 0.0));
        assert_eq!(r.identifier(), &[0, 0, 0, 1]);
    }

    #[test]
    fn relaxation_finds_cheaper_later_path() {
        // Claim-on-push would hand pixel 1 to the left seed, which reaches
        // it first at cost 0.36; the right seed gets there for 0.01 + 0.09.
        let g = row(&[0.0, 0.6, 0.9, 1.0]);
        let s = SeedSet::from_points(&[([0, 0].into(), 1), ([0, 3].into(), 2)], 3).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert_eq!(r.identifier(), &[0, 1, 1, 1]);
        assert_eq!(r.parent(), &[0, 2, 3, 3]);
        assert_abs_diff_eq!(r.distance()[2], 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(r.distance()[1], 0.10, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let g = row(&[0.0, 1.0]);
        let empty = SeedSet::new(vec![], 2).unwrap();
        assert!(grow_regions(&g, &empty, Connectivity::Faces).is_err());

        let dup = SeedSet::from_points(&[([0, 1].into(), 1), ([0, 1].into(), 1)], 2).unwrap();
        assert!(grow_regions(&g, &dup, Connectivity::Faces).is_err());

        let oob = SeedSet::from_points(&[([0, 2].into(), 1)], 2).unwrap();
        assert!(grow_regions(&g, &oob, Connectivity::Faces).is_err());
    }

    #[test]
    fn multichannel_cost_is_squared_l2() {
        let g = Grid::new(&[1, 2], 2, vec![0.0, 0.0, 0.3, 0.4]).unwrap();
        let s = SeedSet::from_points(&[([0, 0].into(), 1)], 2).unwrap();
        let r = grow_regions(&g, &s, Connectivity::Faces).unwrap();
        assert_abs_diff_eq!(r.distance()[1], 0.25, epsilon = 1e-12);
    }
}
