//! Generalized Gauss map samples and the value-distribution audits.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::SurfaceMesh;
use crate::domain::CircularDomain;
use crate::holo::HoloForm;
use crate::weierstrass::WeierstrassTuple;
use crate::{Error, Result, C};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_REL_TOL: f64 = 1e-8;
/// `min ≥ margin · median` certifies a form has no zeros on a sample set.
pub const ZERO_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveSample {
    pub point: C,
    pub w: Vec<C>,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperplane {
    pub coefficients: Vec<C>,
    #[serde(default)]
    pub label: String,
}

impl Hyperplane {
    pub fn new(coefficients: Vec<C>, label: impl Into<String>) -> Result<Self> {
        if coefficients.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::Config("hyperplane coefficients must not all vanish".into()));
        }
        Ok(Hyperplane { coefficients, label: label.into() })
    }

    fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussSamples {
    pub samples: Vec<ProjectiveSample>,
    /// `max |Σw_j²| / |w|²`.
    pub quadric_residual: f64,
}

/// Deterministic golden-angle samples of the domain, `count` of them.
pub fn audit_points(domain: &CircularDomain, count: usize) -> Vec<C> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    // Oversample so the holes do not starve the count.
    let total = 4 * count;
    while out.len() < count && k < 64 * count {
        let r = domain.outer_radius * ((k % total) as f64 + 0.5).sqrt() / (total as f64).sqrt();
        let z = domain.outer_center + C::from_polar(r * (1.0 - 1e-9), golden * k as f64);
        if domain.contains(z) {
            out.push(z);
        }
        k += 1;
    }
    out
}

pub fn gauss_samples(w: &WeierstrassTuple, points: &[C]) -> Result<GaussSamples> {
    let samples: Vec<ProjectiveSample> = points
        .par_iter()
        .map(|&z| {
            let v = w.forms.iter().map(|f| f.eval(z)).collect::<Result<Vec<_>>>()?;
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            Ok(ProjectiveSample { point: z, w: v, norm })
        })
        .collect::<Result<_>>()?;
    let zeros: Vec<(f64, f64)> = samples.iter().filter(|s| !(s.norm > 0.0)).map(|s| (s.point.re, s.point.im)).collect();
    if !zeros.is_empty() {
        return Err(Error::ZeroVector { points: zeros });
    }
    let quadric_residual = samples
        .iter()
        .map(|s| s.w.iter().map(|c| c * c).sum::<C>().norm() / (s.norm * s.norm))
        .fold(0.0, f64::max);
    Ok(GaussSamples { samples, quadric_residual })
}

/// `min |⟨w, H⟩| / (|w| |H|)` with the bilinear pairing `Σ w_j H_j`.
pub fn min_incidence(samples: &[ProjectiveSample], h: &Hyperplane) -> f64 {
    let hn = h.norm();
    samples
        .par_iter()
        .map(|s| s.w.iter().zip(&h.coefficients).map(|(a, b)| a * b).sum::<C>().norm() / (s.norm * hn))
        .reduce(|| f64::INFINITY, f64::min)
}

fn complex_rank(rows: &[Vec<C>], cols: usize) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let m = DMatrix::<C>::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * top).count()
}

/// Numerical rank of the normalized sample vectors.
pub fn nondegeneracy_rank(samples: &[ProjectiveSample]) -> usize {
    let n = samples.first().map_or(0, |s| s.w.len());
    let rows: Vec<Vec<C>> = samples.iter().map(|s| s.w.iter().map(|c| c / s.norm).collect()).collect();
    complex_rank(&rows, n)
}

/// Affine rank of the mesh positions.
pub fn fullness_rank(mesh: &SurfaceMesh) -> usize {
    let rows = mesh.positions.len();
    let n = mesh.dimension;
    if rows < 2 || n == 0 {
        return 0;
    }
    let mean: Vec<f64> = (0..n).map(|k| mesh.positions.iter().map(|x| x[k]).sum::<f64>() / rows as f64).collect();
    let m = DMatrix::<f64>::from_fn(rows, n, |i, j| mesh.positions[i][j] - mean[j]);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * top).count()
}

/// `sup |Σ_{k≤m} w_k²| / Σ|w_k|²` in the given coordinates.
pub fn decomposability_probe(samples: &[ProjectiveSample], m: usize) -> Result<f64> {
    let n = samples.first().map_or(0, |s| s.w.len());
    if m == 0 || m >= n {
        return Err(Error::Config(format!("split {m} must satisfy 1 <= m < {n}")));
    }
    Ok(samples
        .iter()
        .map(|s| s.w[..m].iter().map(|c| c * c).sum::<C>().norm() / (s.norm * s.norm))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroReport {
    pub min_modulus: f64,
    pub median_modulus: f64,
    pub pass: bool,
    /// Points below the threshold, at most 32.
    pub offending: Vec<C>,
}

/// Minimum modulus of the forms' joint vector `(Σ|f_k|²)^{1/2}` over
/// `points` outside the exclusion discs.
pub fn zero_audit(forms: &[&HoloForm], points: &[C], exclusions: &[(C, f64)]) -> Result<ZeroReport> {
    let kept: Vec<C> = points
        .iter()
        .copied()
        .filter(|z| exclusions.iter().all(|(c, r)| (z - c).norm() > *r))
        .collect();
    let mods: Vec<f64> = kept
        .par_iter()
        .map(|&z| {
            let mut s = 0.0;
            for f in forms {
                s += f.eval(z)?.norm_sqr();
            }
            Ok(s.sqrt())
        })
        .collect::<Result<_>>()?;
    if mods.is_empty() {
        return Ok(ZeroReport { min_modulus: f64::NAN, median_modulus: f64::NAN, pass: false, offending: Vec::new() });
    }
    let mut sorted = mods.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let min = sorted[0];
    let threshold = ZERO_MARGIN * median;
    let offending: Vec<C> = kept.iter().zip(&mods).filter(|(_, &m)| !(m >= threshold)).map(|(z, _)| *z).take(32).collect();
    Ok(ZeroReport { min_modulus: min, median_modulus: median, pass: min >= threshold && median > 0.0, offending })
}

/// Every subset of at most `n − 1` hyperplanes has full coefficient rank.
pub fn general_position(planes: &[Hyperplane]) -> bool {
    let Some(n) = planes.first().map(|p| p.coefficients.len()) else {
        return true;
    };
    let count = planes.len();
    assert!(count <= 20, "all-subset test is exponential in the plane count");
    (1u32..(1 << count)).all(|mask| {
        let k = mask.count_ones() as usize;
        if k > n - 1 {
            return true;
        }
        let rows: Vec<Vec<C>> = (0..count).filter(|i| mask >> i & 1 == 1).map(|i| planes[i].coefficients.clone()).collect();
        complex_rank(&rows, n) == k
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl AuditRow {
    pub fn at_most(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        AuditRow { check: check.into(), value, threshold, pass: value <= threshold }
    }

    pub fn at_least(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        AuditRow { check: check.into(), value, threshold, pass: value >= threshold }
    }
}

pub fn rows_to_csv(rows: &[AuditRow]) -> String {
    let mut s = String::from("check,value,threshold,pass\n");
    for r in rows {
        let _ = writeln!(s, "{},{:e},{:e},{}", r.check, r.value, r.threshold, r.pass);
    }
    s
}

/// Gauss-map audit of a tuple against hyperplanes on `count` samples.
pub fn gauss_report(
    w: &WeierstrassTuple,
    planes: &[Hyperplane],
    mesh: Option<&SurfaceMesh>,
    count: usize,
    incidence_floor: f64,
) -> Result<Vec<AuditRow>> {
    let n = w.dimension();
    let g = gauss_samples(w, &audit_points(&w.domain, count))?;
    let mut rows = vec![AuditRow::at_most("quadric_residual", g.quadric_residual, 1e-11)];
    for p in planes {
        if p.coefficients.len() != n {
            return Err(Error::Config(format!("hyperplane '{}' has {} coefficients in dimension {n}", p.label, p.coefficients.len())));
        }
        rows.push(AuditRow::at_least(format!("min_incidence:{}", p.label), min_incidence(&g.samples, p), incidence_floor));
    }
    if !planes.is_empty() {
        rows.push(AuditRow::at_least("general_position", general_position(planes) as u8 as f64, 1.0));
    }
    rows.push(AuditRow::at_least("nondegeneracy_rank", nondegeneracy_rank(&g.samples) as f64, n as f64));
    if let Some(m) = mesh {
        rows.push(AuditRow::at_least("fullness_rank", fullness_rank(m) as f64, n as f64));
    }
    let forms: Vec<&HoloForm> = w.forms.iter().collect();
    let z = zero_audit(&forms, &audit_points(&w.domain, count), &[])?;
    rows.push(AuditRow::at_least("zero_audit_min_over_median", z.min_modulus / z.median_modulus, ZERO_MARGIN));
    Ok(rows)
}
