//! Immersion positions `X(P) = X(P₀) + Re ∫_{P₀}^P Ψ` on the sample lattice.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{build_grid, homology_basis, SampleGrid};
use crate::holo::{period, HoloForm};
use crate::weierstrass::{metric_density, WeierstrassTuple};
use crate::{Error, Result, C};

use super::exhaustion::conformal_distance;

/// Allowed closure defect per unit quad perimeter.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let step = p1 / dp;
            t -= step;
            if step.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                w[i] = 2.0 / ((1.0 - t * t) * dq * dq);
                break;
            }
        }
        x[i] = t;
    }
    (x, w)
}

/// 8-point edge integrator of `Re ∫ ψ_k` for every form.
pub struct EdgeIntegrator<'a> {
    forms: &'a [HoloForm],
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> EdgeIntegrator<'a> {
    pub fn new(forms: &'a [HoloForm]) -> Self {
        let (nodes, weights) = gauss_legendre(8);
        EdgeIntegrator { forms, nodes, weights }
    }

    pub fn integrate(&self, a: C, b: C) -> Result<Vec<f64>> {
        let half = (b - a) * 0.5;
        let mid = (a + b) * 0.5;
        let mut acc = vec![C::new(0.0, 0.0); self.forms.len()];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let z = mid + half * x;
            for (k, f) in self.forms.iter().enumerate() {
                acc[k] += f.eval(z)? * w;
            }
        }
        Ok(acc.into_iter().map(|s| (s * half).re).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceEntry {
    pub stage: usize,
    pub measured: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceMesh {
    pub dimension: usize,
    pub spacing: f64,
    pub params: Vec<C>,
    pub positions: Vec<Vec<f64>>,
    pub density: Vec<f64>,
    /// Counter-clockwise quads as indices into `params`.
    pub faces: Vec<[usize; 4]>,
    pub max_closure_defect: f64,
    /// `max defect / perimeter` over quads.
    pub max_closure_ratio: f64,
    pub distance_log: Vec<DistanceEntry>,
}

/// Integrates the tuple over the inside lattice, starting at `base_values`
/// at the base point and following a breadth-first tree of axis edges.
pub fn integrate_mesh(tuple: &WeierstrassTuple, base_values: &[f64], grid: &SampleGrid, period_tol: f64) -> Result<SurfaceMesh> {
    let n = tuple.dimension();
    if base_values.len() != n {
        return Err(Error::Config(format!("{} base values for dimension {n}", base_values.len())));
    }
    for (k, cycle) in homology_basis(&tuple.domain).iter().enumerate() {
        for f in &tuple.forms {
            let p = period(f, cycle)?;
            if p.re.abs() > period_tol * (1.0 + p.norm()) {
                return Err(Error::PeriodLeak { cycle: k, value: p.re });
            }
        }
    }
    let edges = EdgeIntegrator::new(&tuple.forms);
    let domain = grid.domain();
    let inside = grid.inside_indices();
    // Axis edges from each inside node to its +x and +y neighbours.
    let axis: Vec<[Option<Vec<f64>>; 2]> = inside
        .par_iter()
        .map(|&idx| {
            let (i, j) = grid.coords(idx);
            let a = grid.point(idx);
            let mut out = [None, None];
            for (d, (di, dj)) in [(1, 0), (0, 1)].into_iter().enumerate() {
                let Some(m) = grid.index(i + di, j + dj) else { continue };
                if !grid.is_inside(m) || !domain.segment_inside(a, grid.point(m)) {
                    continue;
                }
                out[d] = Some(edges.integrate(a, grid.point(m))?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut slot = vec![usize::MAX; grid.len()];
    for (k, &idx) in inside.iter().enumerate() {
        slot[idx] = k;
    }
    let edge = |from: usize, dir: usize| axis[slot[from]][dir].as_ref();

    let root = grid
        .nearest_inside(tuple.base_point)
        .ok_or_else(|| Error::Config("grid has no inside nodes".into()))?;
    let root_offset = edges.integrate(tuple.base_point, grid.point(root))?;
    let mut pos: Vec<Option<Vec<f64>>> = vec![None; inside.len()];
    pos[slot[root]] = Some(base_values.iter().zip(&root_offset).map(|(a, b)| a + b).collect());
    let mut order = vec![root];
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let (i, j) = grid.coords(v);
        let here = pos[slot[v]].clone().expect("visited");
        let steps = [(1i64, 0i64, 0usize, false), (0, 1, 1, false), (-1, 0, 0, true), (0, -1, 1, true)];
        for (di, dj, dir, back) in steps {
            let Some(m) = grid.index(i + di, j + dj) else { continue };
            if !grid.is_inside(m) || pos[slot[m]].is_some() {
                continue;
            }
            let inc = if back { edge(m, dir).map(|e| e.iter().map(|x| -x).collect::<Vec<_>>()) } else { edge(v, dir).cloned() };
            let Some(inc) = inc else { continue };
            pos[slot[m]] = Some(here.iter().zip(&inc).map(|(a, b)| a + b).collect());
            order.push(m);
            queue.push_back(m);
        }
    }
    order.sort_unstable();
    let mut compact = vec![usize::MAX; grid.len()];
    for (k, &idx) in order.iter().enumerate() {
        compact[idx] = k;
    }
    let params: Vec<C> = order.iter().map(|&i| grid.point(i)).collect();
    let positions: Vec<Vec<f64>> = order.iter().map(|&i| pos[slot[i]].clone().expect("reached")).collect();
    let density = metric_density(tuple, None, &params)?;

    let h = grid.spacing;
    let mut faces = Vec::new();
    let mut max_defect = 0.0_f64;
    for &idx in &order {
        let (i, j) = grid.coords(idx);
        let corner = |di: i64, dj: i64| grid.index(i + di, j + dj).filter(|&m| compact[m] != usize::MAX);
        let (Some(b), Some(c), Some(d)) = (corner(1, 0), corner(1, 1), corner(0, 1)) else { continue };
        let (Some(e0), Some(e1), Some(e2), Some(e3)) = (edge(idx, 0), edge(b, 1), edge(d, 0), edge(idx, 1)) else {
            continue;
        };
        let defect = (0..n).map(|k| (e0[k] + e1[k] - e2[k] - e3[k]).powi(2)).sum::<f64>().sqrt();
        max_defect = max_defect.max(defect);
        faces.push([compact[idx], compact[b], compact[c], compact[d]]);
    }
    Ok(SurfaceMesh {
        dimension: n,
        spacing: h,
        params,
        positions,
        density,
        faces,
        max_closure_defect: max_defect,
        max_closure_ratio: max_defect / (4.0 * h),
        distance_log: Vec::new(),
    })
}

/// Mesh of the tuple on a fresh lattice over its domain.
pub fn mesh_on_domain(tuple: &WeierstrassTuple, base_values: &[f64], spacing: f64, period_tol: f64) -> Result<SurfaceMesh> {
    let grid = build_grid(&tuple.domain, spacing)?;
    integrate_mesh(tuple, base_values, &grid, period_tol)
}

/// Intrinsic distance from `p0` to the boundary of `stage` under the metric
/// `σ² = Σ|ψ_j|²`. The 8-neighbour lattice overestimates by at most
/// `sec(π/8)`.
pub fn intrinsic_distance(tuple: &WeierstrassTuple, p0: C, stage: &crate::domain::CircularDomain, spacing: f64) -> Result<f64> {
    let sigma2 = |z: C| {
        tuple.forms.iter().map(|f| f.eval(z).map(|v| v.norm_sqr()).unwrap_or(f64::INFINITY)).sum::<f64>()
    };
    conformal_distance(stage, p0, spacing, &sigma2)
}

impl SurfaceMesh {
    pub fn is_injective_projection(&self, a: usize, b: usize, tol: f64) -> bool {
        self.params.iter().zip(&self.positions).all(|(z, x)| (x[a] - z.re).abs() <= tol && (x[b] - z.im).abs() <= tol)
    }

    /// OBJ text with the first three coordinates as vertices and quads as faces.
    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(64 * self.params.len());
        let _ = writeln!(s, "# weierforge surface, dimension {}", self.dimension);
        for x in &self.positions {
            let c = |k: usize| x.get(k).copied().unwrap_or(0.0);
            let _ = writeln!(s, "v {:e} {:e} {:e}", c(0), c(1), c(2));
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
        }
        s
    }

    /// CSV with the parameter, every coordinate and the metric density.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,v");
        for k in 1..=self.dimension {
            let _ = write!(s, ",x{k}");
        }
        s.push_str(",density\n");
        for ((z, x), d) in self.params.iter().zip(&self.positions).zip(&self.density) {
            let _ = write!(s, "{:e},{:e}", z.re, z.im);
            for v in x {
                let _ = write!(s, ",{v:e}");
            }
            let _ = writeln!(s, ",{d:e}");
        }
        s
    }

    pub fn distances_csv(&self) -> String {
        let mut s = String::from("stage,measured,target\n");
        for e in &self.distance_log {
            let _ = writeln!(s, "{},{:e},{:e}", e.stage, e.measured, e.target);
        }
        s
    }
}
