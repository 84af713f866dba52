use crate::error::Result;
use crate::grid::{Connectivity, Grid};

use super::grow::edge_cost;
use super::SeedSet;

/// Textbook O(V^2) multi-source Dijkstra with a linear scan for the minimum
/// instead of a heap. Used as an independent check of [`super::grow_regions`]
/// on small grids.
pub fn dijkstra_reference(g: &Grid, s: &SeedSet, conn: Connectivity) -> Result<Vec<f64>> {
    s.validate_for(g)?;
    let lattice = g.lattice();
    let n = lattice.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    for seed in s.seeds() {
        dist[lattice.linear(&seed.location)] = 0.0;
    }
    for _ in 0..n {
        let mut u = None;
        for v in 0..n {
            if !settled[v] && dist[v].is_finite() && u.is_none_or(|u: usize| dist[v] < dist[u]) {
                u = Some(v);
            }
        }
        let Some(u) = u else { break };
        settled[u] = true;
        for v in lattice.neighbor_indices(u, conn) {
            let alt = dist[u] + edge_cost(g.pixel(u), g.pixel(v));
            if alt < dist[v] {
                dist[v] = alt;
            }
        }
    }
    Ok(dist)
}
