//! Conformal-metric shortest paths on the masked lattice.
//!
//! Edge cost is `σ(midpoint) · |edge|`. Paths start and end at lattice
//! nodes; the gap from an end node to the circle it stands for is charged
//! `σ(node) · distance`. The 8-neighbor metric overestimates Euclidean
//! lengths by at most `sec(π/8) ≈ 1.0824`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::domain::{SampleGrid, NEIGHBOR_OFFSETS};
use crate::C;

/// Upper bound on the 8-neighbor overestimate of Euclidean length.
pub const OCTILE_OVERESTIMATE: f64 = 1.082_392_200_292_394;

const NONE: u32 = u32::MAX;
/// Forward directions; the others are reached through the neighbor's entry.
const FORWARD: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

/// Compact numbering of the inside nodes plus precomputed edge costs.
pub struct WeightedGraph<'g> {
    grid: &'g SampleGrid,
    nodes: Vec<usize>,
    lookup: Vec<u32>,
    /// `cost[4k + d]` for forward direction `d`; `NaN` when the edge is absent.
    cost: Vec<f64>,
    sigma_at_node: Vec<f64>,
}

impl<'g> WeightedGraph<'g> {
    /// `sigma` returns the metric factor `σ = √(σ²)` at a point.
    pub fn new(grid: &'g SampleGrid, sigma: &(dyn Fn(C) -> f64 + Sync)) -> Self {
        let nodes = grid.inside_indices();
        let mut lookup = vec![NONE; grid.len()];
        for (k, &n) in nodes.iter().enumerate() {
            lookup[n] = k as u32;
        }
        let per_node: Vec<([f64; 4], f64)> = nodes
            .par_iter()
            .map(|&n| {
                let a = grid.point(n);
                let (i, j) = grid.coords(n);
                let mut out = [f64::NAN; 4];
                for (d, &(di, dj)) in FORWARD.iter().enumerate() {
                    let Some(m) = grid.index(i + di, j + dj) else { continue };
                    if !grid.is_inside(m) {
                        continue;
                    }
                    let b = grid.point(m);
                    if !grid.domain().holes.is_empty() && !grid.domain().segment_inside(a, b) {
                        continue;
                    }
                    out[d] = sigma(0.5 * (a + b)) * (b - a).norm();
                }
                (out, sigma(a))
            })
            .collect();
        let mut cost = Vec::with_capacity(4 * nodes.len());
        let mut sigma_at_node = Vec::with_capacity(nodes.len());
        for (c, s) in per_node {
            cost.extend_from_slice(&c);
            sigma_at_node.push(s);
        }
        WeightedGraph { grid, nodes, lookup, cost, sigma_at_node }
    }

    pub fn grid(&self) -> &SampleGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, k: usize) -> C {
        self.grid.point(self.nodes[k])
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma_at_node[k]
    }

    fn edges(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = self.grid.coords(self.nodes[k]);
        FORWARD.iter().enumerate().flat_map(move |(d, &(di, dj))| {
            let fwd = self.grid.index(i + di, j + dj).map(|m| self.lookup[m]).filter(|&m| m != NONE);
            let fwd = fwd.and_then(|m| {
                let c = self.cost[4 * k + d];
                (!c.is_nan()).then_some((m as usize, c))
            });
            let back = self.grid.index(i - di, j - dj).map(|m| self.lookup[m]).filter(|&m| m != NONE);
            let back = back.and_then(|m| {
                let c = self.cost[4 * m as usize + d];
                (!c.is_nan()).then_some((m as usize, c))
            });
            fwd.into_iter().chain(back)
        })
    }

    /// Compact ids of nodes missing at least one of their eight lattice edges.
    pub fn boundary_layer(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&k| self.edges(k).count() < NEIGHBOR_OFFSETS.len()).collect()
    }

    pub fn compact(&self, lattice_index: usize) -> Option<usize> {
        let c = self.lookup[lattice_index];
        (c != NONE).then_some(c as usize)
    }

    /// `min over targets of (dist(source, target) + target offset)`, where
    /// every source starts at its own offset.
    pub fn shortest(&self, sources: &[(usize, f64)], targets: &[(usize, f64)]) -> f64 {
        let mut target_offset = vec![f64::INFINITY; self.nodes.len()];
        for &(t, off) in targets {
            target_offset[t] = target_offset[t].min(off);
        }
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for &(s, off) in sources {
            if off < dist[s] {
                dist[s] = off;
                heap.push(Entry(off, s as u32));
            }
        }
        let mut best = f64::INFINITY;
        while let Some(Entry(d, k)) = heap.pop() {
            let k = k as usize;
            if d > dist[k] {
                continue;
            }
            if d >= best {
                break;
            }
            best = best.min(d + target_offset[k]);
            for (n, c) in self.edges(k) {
                let nd = d + c;
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Entry(nd, n as u32));
                }
            }
        }
        best
    }
}

/// Min-heap entry ordered by distance, then node id.
#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Metric distance from `p0` to the boundary of the grid's domain.
pub fn distance_to_boundary(graph: &WeightedGraph, p0: C) -> f64 {
    let grid = graph.grid();
    let Some(src) = grid.nearest_inside(p0).and_then(|n| graph.compact(n)) else {
        return f64::INFINITY;
    };
    let start = graph.sigma(src) * (graph.point(src) - p0).norm();
    let targets: Vec<(usize, f64)> = graph
        .boundary_layer()
        .into_iter()
        .map(|k| (k, graph.sigma(k) * grid.domain().distance_to_boundary(graph.point(k))))
        .collect();
    graph.shortest(&[(src, start)], &targets)
}

/// Metric length of the shortest path between two concentric circles
/// `|z − c| = r_in` and `|z − c| = r_out` bounding the grid.
pub fn crossing(graph: &WeightedGraph, center: C, r_in: f64, r_out: f64) -> f64 {
    let mid = 0.5 * (r_in + r_out);
    let layer = graph.boundary_layer();
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    for k in layer {
        let rho = (graph.point(k) - center).norm();
        if rho < mid {
            sources.push((k, graph.sigma(k) * (rho - r_in).max(0.0)));
        } else {
            targets.push((k, graph.sigma(k) * (r_out - rho).max(0.0)));
        }
    }
    graph.shortest(&sources, &targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, CircularDomain};

    #[test]
    fn flat_disc_radius() {
        let d = CircularDomain::disc(C::new(0.0, 0.0), 1.0).unwrap();
        let g = build_grid(&d, 0.02).unwrap();
        let one = WeightedGraph::new(&g, &|_| 1.0);
        let r = distance_to_boundary(&one, C::new(0.0, 0.0));
        assert!((0.99..=OCTILE_OVERESTIMATE * 1.01).contains(&r), "{r}");
        let two = WeightedGraph::new(&g, &|_| 2.0);
        assert!((distance_to_boundary(&two, C::new(0.0, 0.0)) - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn flat_annulus_crossing() {
        let d = CircularDomain::annulus(C::new(0.0, 0.0), 0.5, 1.0).unwrap();
        let g = build_grid(&d, 0.01).unwrap();
        let w = WeightedGraph::new(&g, &|_| 1.0);
        let len = crossing(&w, C::new(0.0, 0.0), 0.5, 1.0);
        assert!((len - 0.5).abs() <= 0.09 * 0.5, "{len}");
        let w3 = WeightedGraph::new(&g, &|_| 3.0);
        assert!((crossing(&w3, C::new(0.0, 0.0), 0.5, 1.0) - 3.0 * len).abs() < 1e-12);
    }

    #[test]
    fn slow_band_is_avoided_when_cheaper_around() {
        // A thin expensive spoke along the positive real axis does not
        // change the radial crossing.
        let d = CircularDomain::annulus(C::new(0.0, 0.0), 0.5, 1.0).unwrap();
        let g = build_grid(&d, 0.02).unwrap();
        let flat = crossing(&WeightedGraph::new(&g, &|_| 1.0), C::new(0.0, 0.0), 0.5, 1.0);
        let spoke = |z: C| if z.im.abs() < 0.05 && z.re > 0.0 { 100.0 } else { 1.0 };
        let with = crossing(&WeightedGraph::new(&g, &spoke), C::new(0.0, 0.0), 0.5, 1.0);
        assert!((with - flat).abs() < 1e-12);
    }
}
