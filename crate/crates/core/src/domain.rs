//! Circular planar domains: a closed round disc with finitely many disjoint
//! open round holes removed, their homology basis of hole circles, and masked
//! regular sampling grids.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C};

/// Relative slack used by the closed-set membership tests.
const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Minimum number of trapezoid nodes on a cycle.
pub const MIN_QUADRATURE_POINTS: usize = 64;

/// Default number of trapezoid nodes on a cycle.
pub const DEFAULT_QUADRATURE_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: C,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularDomain {
    pub outer_center: C,
    pub outer_radius: f64,
    pub holes: Vec<Hole>,
    #[serde(default)]
    pub label: String,
}

impl CircularDomain {
    pub fn new(outer_center: C, outer_radius: f64, holes: Vec<Hole>, label: impl Into<String>) -> Result<Self> {
        let d = CircularDomain {
            outer_center,
            outer_radius,
            holes,
            label: label.into(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn disc(center: C, radius: f64) -> Result<Self> {
        Self::new(center, radius, Vec::new(), "disc")
    }

    /// The annulus `r < |z - center| <= big_r` (closed on the outside, open hole).
    pub fn annulus(center: C, r: f64, big_r: f64) -> Result<Self> {
        Self::new(center, big_r, vec![Hole { center, radius: r }], "annulus")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer_radius.is_finite() && self.outer_radius > 0.0) {
            return Err(Error::InvalidDomain("outer radius must be positive".into()));
        }
        for (i, h) in self.holes.iter().enumerate() {
            if !(h.radius.is_finite() && h.radius > 0.0) {
                return Err(Error::InvalidDomain(format!("hole {i} radius must be positive")));
            }
            if (h.center - self.outer_center).norm() + h.radius >= self.outer_radius {
                return Err(Error::InvalidDomain(format!("hole {i} is not inside the outer disc")));
            }
            for (k, o) in self.holes.iter().enumerate().skip(i + 1) {
                if (h.center - o.center).norm() <= h.radius + o.radius {
                    return Err(Error::InvalidDomain(format!("holes {i} and {k} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Number of holes; equals the rank of the first homology group.
    pub fn nu(&self) -> usize {
        self.holes.len()
    }

    /// Membership in the closed disc minus the open holes.
    pub fn contains(&self, p: C) -> bool {
        if (p - self.outer_center).norm() > self.outer_radius * (1.0 + MEMBERSHIP_SLACK) {
            return false;
        }
        self.holes
            .iter()
            .all(|h| (p - h.center).norm() >= h.radius * (1.0 - MEMBERSHIP_SLACK))
    }

    /// Smallest separation between two distinct boundary circles.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, h) in self.holes.iter().enumerate() {
            gap = gap.min(self.outer_radius - (h.center - self.outer_center).norm() - h.radius);
            for o in &self.holes[i + 1..] {
                gap = gap.min((h.center - o.center).norm() - h.radius - o.radius);
            }
        }
        gap
    }

    /// Distance from the center of hole `h` to the nearest other boundary circle.
    fn clearance_from_hole_center(&self, h: usize) -> f64 {
        let hole = self.holes[h];
        let mut d = self.outer_radius - (hole.center - self.outer_center).norm();
        for (k, o) in self.holes.iter().enumerate() {
            if k != h {
                d = d.min((hole.center - o.center).norm() - o.radius);
            }
        }
        d
    }

    /// Concentric scaling used by the exhaustion: the outer radius is
    /// multiplied by `s` and every hole radius divided by `s`, so that
    /// `scaled(s) ⊂ scaled(t)` whenever `s < t`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let d = CircularDomain {
            outer_center: self.outer_center,
            outer_radius: self.outer_radius * s,
            holes: self
                .holes
                .iter()
                .map(|h| Hole { center: h.center, radius: h.radius / s })
                .collect(),
            label: format!("{}@{s}", self.label),
        };
        d.validate()?;
        Ok(d)
    }

    /// Boundary circles as `(center, radius)`: the outer circle first, then the holes.
    pub fn boundary_circles(&self) -> Vec<(C, f64)> {
        std::iter::once((self.outer_center, self.outer_radius))
            .chain(self.holes.iter().map(|h| (h.center, h.radius)))
            .collect()
    }

    /// Euclidean distance from `p` (assumed inside) to the boundary.
    pub fn distance_to_boundary(&self, p: C) -> f64 {
        let mut d = self.outer_radius - (p - self.outer_center).norm();
        for h in &self.holes {
            d = d.min((p - h.center).norm() - h.radius);
        }
        d
    }

    /// Whether the closed segment `[a, b]` stays in the domain (endpoints
    /// assumed inside; the outer disc is convex so only holes can cut it).
    pub fn segment_inside(&self, a: C, b: C) -> bool {
        self.holes.iter().all(|h| segment_point_distance(a, b, h.center) >= h.radius * (1.0 - MEMBERSHIP_SLACK))
    }

    /// Deterministic boundary samples: `per_circle` equispaced points on every boundary circle.
    pub fn boundary_samples(&self, per_circle: usize) -> Vec<C> {
        let mut out = Vec::with_capacity(per_circle * (1 + self.holes.len()));
        for (c, r) in self.boundary_circles() {
            for k in 0..per_circle {
                let t = 2.0 * PI * k as f64 / per_circle as f64;
                out.push(c + C::from_polar(r, t));
            }
        }
        out
    }
}

fn segment_point_distance(a: C, b: C, p: C) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// A positively or negatively oriented circle used to take periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub center: C,
    pub radius: f64,
    pub orientation: i8,
    pub quadrature_points: usize,
}

impl Cycle {
    pub fn new(center: C, radius: f64, orientation: i8, quadrature_points: usize) -> Self {
        Cycle {
            center,
            radius,
            orientation: if orientation < 0 { -1 } else { 1 },
            quadrature_points: quadrature_points.max(MIN_QUADRATURE_POINTS),
        }
    }

    pub fn with_points(self, quadrature_points: usize) -> Self {
        Cycle::new(self.center, self.radius, self.orientation, quadrature_points)
    }

    /// Trapezoid nodes and the matching `dz` weights (including `2π/N`
    /// and the orientation), so `∮ f dz ≈ Σ f(z_k) w_k`.
    pub fn nodes_and_weights(&self, n: usize) -> (Vec<C>, Vec<C>) {
        let h = 2.0 * PI / n as f64;
        let sign = self.orientation as f64;
        (0..n)
            .map(|k| {
                let e = C::from_polar(1.0, h * k as f64);
                (self.center + e * self.radius, crate::I * e * (self.radius * h * sign))
            })
            .unzip()
    }

    /// Whether `p` lies strictly inside the circle.
    pub fn encloses(&self, p: C) -> bool {
        (p - self.center).norm() < self.radius
    }
}

/// Discrete winding number of the cycle's quadrature polygon around `p`.
pub fn winding_number(cycle: &Cycle, p: C) -> i32 {
    let (nodes, _) = cycle.nodes_and_weights(cycle.quadrature_points);
    let n = nodes.len();
    let mut total = 0.0;
    for k in 0..n {
        let a = nodes[k] - p;
        let b = nodes[(k + 1) % n] - p;
        total += (b / a).arg();
    }
    let w = total / (2.0 * PI);
    w.round() as i32 * cycle.orientation as i32
}

/// One positively oriented circle per hole, at the geometric mean of the
/// hole radius and the distance from the hole center to the nearest other
/// boundary circle.
pub fn homology_basis(domain: &CircularDomain) -> Vec<Cycle> {
    (0..domain.nu())
        .map(|h| {
            let hole = domain.holes[h];
            let clearance = domain.clearance_from_hole_center(h);
            Cycle::new(hole.center, (hole.radius * clearance).sqrt(), 1, DEFAULT_QUADRATURE_POINTS)
        })
        .collect()
}

/// Masked regular lattice anchored at the outer center, with 8-neighbor
/// adjacency clipped to the domain. Node positions are
/// `outer_center + spacing * (i + i·j)` for `-half <= i, j <= half`.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub spacing: f64,
    pub origin: C,
    pub half: i64,
    inside: Vec<bool>,
    domain: CircularDomain,
}

/// The eight lattice directions; the first four are axis-aligned.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

impl SampleGrid {
    pub fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.inside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inside.is_empty()
    }

    pub fn domain(&self) -> &CircularDomain {
        &self.domain
    }

    pub fn index(&self, i: i64, j: i64) -> Option<usize> {
        if i.abs() > self.half || j.abs() > self.half {
            return None;
        }
        Some(((j + self.half) as usize) * self.side() + (i + self.half) as usize)
    }

    pub fn coords(&self, idx: usize) -> (i64, i64) {
        let side = self.side();
        ((idx % side) as i64 - self.half, (idx / side) as i64 - self.half)
    }

    pub fn point(&self, idx: usize) -> C {
        let (i, j) = self.coords(idx);
        self.origin + C::new(i as f64, j as f64) * self.spacing
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    /// Indices of the inside nodes in lattice order.
    pub fn inside_indices(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&k| self.inside[k]).collect()
    }

    pub fn inside_points(&self) -> Vec<C> {
        self.inside_indices().into_iter().map(|k| self.point(k)).collect()
    }

    /// All `(point, inside)` pairs in lattice order.
    pub fn nodes(&self) -> Vec<(C, bool)> {
        (0..self.inside.len()).map(|k| (self.point(k), self.inside[k])).collect()
    }

    /// Inside neighbors of an inside node joined by an edge inside the domain.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(idx);
        let a = self.point(idx);
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(di, dj)| {
            let n = self.index(i + di, j + dj)?;
            if !self.inside[n] {
                return None;
            }
            if !self.domain.holes.is_empty() && !self.domain.segment_inside(a, self.point(n)) {
                return None;
            }
            Some(n)
        })
    }

    /// Number of connected components of the inside subgraph.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.inside.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.inside.len() {
            if !self.inside[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for n in self.neighbors(v) {
                    if !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        count
    }

    /// Inside node closest to `p`.
    pub fn nearest_inside(&self, p: C) -> Option<usize> {
        let rel = (p - self.origin) / self.spacing;
        let (ci, cj) = (rel.re.round() as i64, rel.im.round() as i64);
        if let Some(k) = self.index(ci, cj) {
            if self.inside[k] {
                return Some(k);
            }
        }
        self.inside_indices()
            .into_iter()
            .min_by(|&a, &b| (self.point(a) - p).norm().total_cmp(&(self.point(b) - p).norm()))
    }
}

/// Build the masked 8-neighbor lattice over `domain`.
pub fn build_grid(domain: &CircularDomain, spacing: f64) -> Result<SampleGrid> {
    let limit = domain.min_gap() / 4.0;
    if !(spacing > 0.0) || spacing >= limit {
        return Err(Error::SpacingTooCoarse { spacing, limit });
    }
    let half = (domain.outer_radius / spacing).ceil() as i64;
    let side = (2 * half + 1) as usize;
    let mut grid = SampleGrid {
        spacing,
        origin: domain.outer_center,
        half,
        inside: vec![false; side * side],
        domain: domain.clone(),
    };
    for k in 0..side * side {
        let p = grid.point(k);
        grid.inside[k] = domain.contains(p);
    }
    if grid.component_count() != 1 {
        return Err(Error::SpacingTooCoarse { spacing, limit });
    }
    Ok(grid)
}

/// A piecewise-linear path.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<C>,
}

impl Polyline {
    pub fn new(vertices: Vec<C>) -> Result<Self> {
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDomain("polyline has repeated consecutive vertices".into()));
        }
        Ok(Polyline { vertices })
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn inside(&self, domain: &CircularDomain) -> bool {
        self.vertices.iter().all(|&v| domain.contains(v))
            && self.vertices.windows(2).all(|w| domain.segment_inside(w[0], w[1]))
    }
}
