//! Polar-sector labyrinths on collar annuli and the crossing lengths they force.
//!
//! Radii `s_n = R − n/m³` split the outer `2/m` of the chart annulus into
//! `2m²` bands. Band `n` carries a sector whose angular gap sits around
//! `arg z_j = 0` for even `n` and `arg z_j = π` for odd `n`, so any curve
//! that crosses the collar while avoiding the sectors has to wind.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::{build_grid, CircularDomain};
use crate::geodesic::{crossing, WeightedGraph};
use crate::holo::HoloForm;
use crate::{Error, Result, C, I};

/// Safety factor on the sampled `μ`.
pub const MU_SAFETY: f64 = 0.99;
/// Headroom of `λ` over `√2 μ m⁴`.
pub const LAMBDA_HEADROOM: f64 = 1.01;
/// Default fraction of the chart annulus width occupied by the sectors.
pub const DEFAULT_FILL: f64 = 1.0 / 1.1;

/// Affine chart `z_j = scale · (z − center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chart {
    pub center: C,
    pub scale: f64,
}

impl Chart {
    pub fn identity(center: C) -> Self {
        Chart { center, scale: 1.0 }
    }

    /// Chart in which the collar has width `2/(m · fill)`, so the sectors
    /// occupy the outer fraction `fill` of it.
    pub fn fitted(collar: &Collar, m: u32, fill: f64) -> Self {
        Chart { center: collar.center, scale: 2.0 / (m as f64 * fill * (collar.outer - collar.inner)) }
    }

    pub fn to_chart(&self, z: C) -> C {
        (z - self.center) * self.scale
    }

    /// `|dz_j/dz|`.
    pub fn derivative(&self) -> f64 {
        self.scale
    }
}

/// Round annulus `inner < |z − center| < outer` in the global coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collar {
    pub center: C,
    pub inner: f64,
    pub outer: f64,
}

impl Collar {
    pub fn new(center: C, inner: f64, outer: f64) -> Self {
        Collar { center, inner, outer }
    }

    pub fn domain(&self) -> Result<CircularDomain> {
        CircularDomain::annulus(self.center, self.inner, self.outer)
    }

    /// Polar sample lattice used to bound the auxiliary metric.
    pub fn samples(&self, radial: usize, angular: usize) -> Vec<C> {
        let mut out = Vec::with_capacity(radial * angular);
        for a in 0..radial {
            let r = self.inner + (self.outer - self.inner) * a as f64 / (radial - 1).max(1) as f64;
            for b in 0..angular {
                out.push(self.center + C::from_polar(r, 2.0 * PI * b as f64 / angular as f64));
            }
        }
        out
    }
}

/// Sector of band `n` in chart radii, with gaps `|arg((−1)ⁿ z_j)| < 1/m²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sector {
    pub n: u32,
    pub inner: f64,
    pub outer: f64,
}

impl Sector {
    /// Chart-coordinate membership.
    pub fn contains(&self, w: C, m: u32) -> bool {
        let r = w.norm();
        if r < self.inner || r > self.outer {
            return false;
        }
        let turned = if self.n % 2 == 0 { w } else { -w };
        let mut t = turned.arg();
        if t < 0.0 {
            t += 2.0 * PI;
        }
        let gap = 1.0 / (m as f64 * m as f64);
        (gap..=2.0 * PI - gap).contains(&t)
    }

    /// Centre of the angular gap in chart angle.
    pub fn gap_angle(&self) -> f64 {
        if self.n % 2 == 0 {
            0.0
        } else {
            PI
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LabyrinthSpec {
    pub chart: Chart,
    pub collar: Collar,
    pub m: u32,
    pub mu: f64,
    pub lambda: f64,
    /// `s_n` for `n = 0..=2m²` in chart radii.
    pub s: Vec<f64>,
    pub sectors: Vec<Sector>,
}

/// Builds the labyrinth of resolution `m` on a collar, taking `μ` from
/// samples `(point, 𝓘)` of the auxiliary metric over the collar.
pub fn make_labyrinth(collar: Collar, chart: Chart, m: u32, aux: &[(C, f64)]) -> Result<LabyrinthSpec> {
    let a = chart.derivative();
    let width = a * (collar.outer - collar.inner);
    if m < 2 || !(2.0 / m as f64 + 1e-12 < width) {
        return Err(Error::ResolutionTooCoarse { m, width });
    }
    let min_density = aux.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if aux.is_empty() || !(min_density > 0.0) || !min_density.is_finite() || aux.iter().any(|s| !s.1.is_finite()) {
        return Err(Error::SingularMetricOnCollar { min_density: if aux.is_empty() { 0.0 } else { min_density } });
    }
    let mu = MU_SAFETY * (min_density / (a * a)).sqrt();
    let mf = m as f64;
    let lambda = std::f64::consts::SQRT_2 * mu * mf.powi(4) * LAMBDA_HEADROOM;
    let big_r = a * collar.outer;
    let m3 = mf.powi(3);
    let count = 2 * m * m;
    let s: Vec<f64> = (0..=count).map(|n| big_r - n as f64 / m3).collect();
    let margin = 1.0 / (4.0 * m3);
    let sectors = (1..=count)
        .map(|n| Sector { n, inner: s[n as usize] + margin, outer: s[n as usize - 1] - margin })
        .collect();
    Ok(LabyrinthSpec { chart, collar, m, mu, lambda, s, sectors })
}

impl LabyrinthSpec {
    /// Chart radii `(r_j, R_j)`.
    pub fn chart_radii(&self) -> (f64, f64) {
        (self.chart.scale * self.collar.inner, self.chart.scale * self.collar.outer)
    }

    /// Index of the sector containing the global point `z`.
    pub fn sector_of(&self, z: C) -> Option<usize> {
        let w = self.chart.to_chart(z);
        let depth = (self.s[0] - w.norm()) * (self.m as f64).powi(3);
        if !(depth >= 0.0) {
            return None;
        }
        let n = depth.ceil().max(1.0) as usize;
        for k in [n.saturating_sub(1), n, n + 1] {
            if (1..=self.sectors.len()).contains(&k) && self.sectors[k - 1].contains(w, self.m) {
                return Some(k - 1);
            }
        }
        None
    }

    /// `μ² m⁸ |dz_j/dz|²`.
    pub fn density_floor(&self) -> f64 {
        let a = self.chart.derivative();
        self.mu * self.mu * (self.m as f64).powi(8) * a * a
    }

    /// Largest admissible lattice spacing in global units: `1/(8m³)` in the chart.
    pub fn grid_spacing(&self) -> f64 {
        1.0 / (8.0 * (self.m as f64).powi(3) * self.chart.derivative())
    }

    /// Amplified pair per `dz` on the sectors: `(λ, βλ)·dz_j` when `theta`
    /// is `None`, else the η-split of `λ dz_j` against `Θ(z)`.
    pub fn amplified(&self, theta: Option<C>, beta: C) -> impl Fn(C) -> [C; 2] {
        let big = C::new(self.lambda * self.chart.derivative(), 0.0);
        move |tz: C| match theta {
            None => [big, beta * big],
            Some(_) => {
                let q = tz / big;
                [(big + q) * 0.5, (big - q) * (I * 0.5)]
            }
        }
    }

    /// Sample points inside each sector: `radial` radii per band and arc
    /// spacing `step` (global units).
    pub fn sector_points(&self, radial: usize, step: f64) -> Vec<C> {
        let gap = 1.0 / (self.m as f64).powi(2);
        let mut out = Vec::new();
        for sec in &self.sectors {
            for a in 0..radial {
                let t = (a as f64 + 0.5) / radial as f64;
                let rw = sec.inner + (sec.outer - sec.inner) * t;
                let r = rw / self.chart.scale;
                let span = 2.0 * PI - 2.0 * gap;
                let count = ((span * r / step).ceil() as usize).max(2);
                for b in 0..count {
                    let ang = sec.gap_angle() + gap + span * (b as f64 + 0.5) / count as f64;
                    out.push(self.chart.center + C::from_polar(r, ang));
                }
            }
        }
        out
    }

    /// SVG overlay of the collar and sectors.
    pub fn to_svg(&self, size_px: f64) -> String {
        let c = self.collar.center;
        let r_out = self.collar.outer;
        let k = size_px / (2.0 * r_out * 1.05);
        let map = |z: C| ((z.re - c.re) * k + size_px / 2.0, size_px / 2.0 - (z.im - c.im) * k);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size_px}" height="{size_px}" viewBox="0 0 {size_px} {size_px}">"#);
        for r in [self.collar.inner, self.collar.outer] {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#333" stroke-width="1"/>"##,
                size_px / 2.0,
                size_px / 2.0,
                r * k
            );
        }
        let gap = 1.0 / (self.m as f64).powi(2);
        for sec in &self.sectors {
            let (a0, a1) = (sec.gap_angle() + gap, sec.gap_angle() + 2.0 * PI - gap);
            let (ri, ro) = (sec.inner / self.chart.scale, sec.outer / self.chart.scale);
            let p = |r: f64, t: f64| map(c + C::from_polar(r, t));
            let (x0, y0) = p(ro, a0);
            let (x1, y1) = p(ro, a1);
            let (x2, y2) = p(ri, a1);
            let (x3, y3) = p(ri, a0);
            let _ = writeln!(
                s,
                r##"<path d="M {x0:.3} {y0:.3} A {:.3} {:.3} 0 1 0 {x1:.3} {y1:.3} L {x2:.3} {y2:.3} A {:.3} {:.3} 0 1 1 {x3:.3} {y3:.3} Z" fill="#c33" fill-opacity="0.6" stroke="none"/>"##,
                ro * k,
                ro * k,
                ri * k,
                ri * k
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Samples of the target pair: the existing pair on `m_points`, the
/// amplified pair on `sector_points`.
pub fn labyrinth_target(
    spec: &LabyrinthSpec,
    theta: Option<&HoloForm>,
    beta: C,
    pair: (&HoloForm, &HoloForm),
    m_points: &[C],
    sector_points: &[C],
) -> Result<Vec<(C, [C; 2])>> {
    let mut out = Vec::with_capacity(m_points.len() + sector_points.len());
    let a = pair.0.eval_many(m_points)?;
    let b = pair.1.eval_many(m_points)?;
    for k in 0..m_points.len() {
        out.push((m_points[k], [a[k], b[k]]));
    }
    let tv = match theta {
        Some(t) => Some(t.eval_many(sector_points)?),
        None => None,
    };
    let amp = spec.amplified(theta.map(|_| C::new(0.0, 0.0)), beta);
    for (k, &z) in sector_points.iter().enumerate() {
        out.push((z, amp(tv.as_ref().map_or(C::new(0.0, 0.0), |v| v[k]))));
    }
    Ok(out)
}

/// Pre-approximation density on the collar: `|Ξ|² + 𝓘` on sectors, `𝓘` elsewhere.
pub fn target_density<'a>(
    spec: &'a LabyrinthSpec,
    theta: Option<&'a HoloForm>,
    beta: C,
    aux: &'a (dyn Fn(C) -> f64 + Sync),
) -> impl Fn(C) -> f64 + Sync + 'a {
    let amp = spec.amplified(theta.map(|_| C::new(0.0, 0.0)), beta);
    move |z: C| {
        let base = aux(z);
        if spec.sector_of(z).is_none() {
            return base;
        }
        let tz = theta.map_or(Ok(C::new(0.0, 0.0)), |t| t.eval(z)).unwrap_or(C::new(0.0, 0.0));
        let [p, q] = amp(tz);
        p.norm_sqr() + q.norm_sqr() + base
    }
}

/// Shortest `σ`-length between the collar's two circles on a lattice of the
/// given spacing; `sigma2` is the density `σ²`.
pub fn collar_crossing(collar: &Collar, sigma2: &(dyn Fn(C) -> f64 + Sync), spacing: f64) -> Result<f64> {
    let grid = build_grid(&collar.domain()?, spacing)?;
    let sigma = |z: C| sigma2(z).max(0.0).sqrt();
    let graph = WeightedGraph::new(&grid, &sigma);
    Ok(crossing(&graph, collar.center, collar.inner, collar.outer))
}

/// Crossing length at a spacing that resolves the sector margins.
pub fn crossing_length(spec: &LabyrinthSpec, sigma2: &(dyn Fn(C) -> f64 + Sync), spacing: f64) -> Result<f64> {
    let limit = spec.grid_spacing();
    if !(spacing > 0.0 && spacing <= limit * (1.0 + 1e-12)) {
        return Err(Error::SpacingTooCoarse { spacing, limit });
    }
    collar_crossing(&spec.collar, sigma2, spacing)
}

#[derive(Debug, Clone, Serialize)]
pub struct MChoice {
    pub m: u32,
    pub length: f64,
    /// `false` when the unamplified metric already reached the target.
    pub amplified: bool,
    pub log: Vec<(u32, f64)>,
}

/// Smallest `m` in `2..=m_max` whose measured crossing exceeds `target`.
/// If the unamplified crossing already does, returns the floor `m = 2`
/// without amplification.
pub fn choose_m(
    target: f64,
    m_max: u32,
    unamplified: Option<f64>,
    mut measure: impl FnMut(u32) -> Result<f64>,
) -> Result<MChoice> {
    if !(target > 0.0) {
        return Err(Error::Config(format!("target length must be positive, got {target}")));
    }
    if let Some(len) = unamplified {
        if len > target {
            return Ok(MChoice { m: 2, length: len, amplified: false, log: vec![(0, len)] });
        }
    }
    let mut log = Vec::new();
    let mut best = unamplified.unwrap_or(0.0);
    for m in 2..=m_max {
        let len = match measure(m) {
            Ok(l) => l,
            Err(Error::ResolutionTooCoarse { .. }) => continue,
            Err(e) => return Err(e),
        };
        log.push((m, len));
        best = best.max(len);
        if len > target {
            return Ok(MChoice { m, length: len, amplified: true, log });
        }
    }
    Err(Error::TargetUnreachable { m_max, best, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;

    fn flat(collar: &Collar) -> Vec<(C, f64)> {
        collar.samples(8, 64).into_iter().map(|z| (z, 1.0)).collect()
    }

    #[test]
    fn radii_and_bands() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let spec = make_labyrinth(col, Chart::identity(col.center), 3, &flat(&col)).unwrap();
        assert_eq!(spec.sectors.len(), 18);
        assert_eq!(spec.s[0], 1.0);
        assert!((spec.s[1] - (1.0 - 1.0 / 27.0)).abs() < 1e-15);
        assert!((spec.s[2] - (1.0 - 2.0 / 27.0)).abs() < 1e-15);
        let first = spec.sectors[0];
        assert!((first.inner - (1.0 - 1.0 / 27.0 + 1.0 / 108.0)).abs() < 1e-15);
        assert!((first.outer - (1.0 - 1.0 / 108.0)).abs() < 1e-15);
        assert!((spec.s[18] - (1.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!((spec.mu - 0.99).abs() < 1e-15);
        assert!(spec.lambda > std::f64::consts::SQRT_2 * spec.mu * 81.0);
    }

    #[test]
    fn coarse_resolution_rejected() {
        let col = Collar::new(C::new(0.0, 0.0), 0.8, 1.0);
        for m in [2, 3] {
            assert!(matches!(
                make_labyrinth(col, Chart::identity(col.center), m, &flat(&col)),
                Err(Error::ResolutionTooCoarse { .. })
            ));
        }
        for m in [2, 3, 4, 5] {
            let spec = make_labyrinth(col, Chart::fitted(&col, m, DEFAULT_FILL), m, &flat(&col)).unwrap();
            let (r, big_r) = spec.chart_radii();
            assert!(*spec.s.last().unwrap() > r && spec.s[0] == big_r);
        }
    }

    #[test]
    fn singular_aux_rejected() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let mut aux = flat(&col);
        aux[3].1 = 0.0;
        assert!(matches!(
            make_labyrinth(col, Chart::identity(col.center), 3, &aux),
            Err(Error::SingularMetricOnCollar { .. })
        ));
    }

    #[test]
    fn sectors_are_disjoint_and_alternate() {
        let col = Collar::new(C::new(0.1, -0.2), 0.8, 1.0);
        let m = 3;
        let spec = make_labyrinth(col, Chart::fitted(&col, m, DEFAULT_FILL), m, &flat(&col)).unwrap();
        let grid = build_grid(&CircularDomain::disc(col.center, 1.05).unwrap(), spec.grid_spacing()).unwrap();
        let mut hits = 0;
        for z in grid.inside_points() {
            let w = spec.chart.to_chart(z);
            let owners: Vec<usize> = (0..spec.sectors.len()).filter(|&k| spec.sectors[k].contains(w, m)).collect();
            assert!(owners.len() <= 1);
            assert_eq!(spec.sector_of(z), owners.first().copied());
            if !owners.is_empty() {
                hits += 1;
                let r = (z - col.center).norm();
                assert!(r > col.inner && r < col.outer);
            }
        }
        assert!(hits > 1000);
        for pair in spec.sectors.windows(2) {
            assert!((pair[0].gap_angle() - pair[1].gap_angle()).abs() == PI);
            assert!(pair[1].outer < pair[0].inner);
        }
    }

    #[test]
    fn amplified_targets() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let mut spec = make_labyrinth(col, Chart::identity(col.center), 3, &flat(&col)).unwrap();
        spec.lambda = 10.0;
        assert_eq!(spec.amplified(None, I)(C::new(0.0, 0.0)), [C::new(10.0, 0.0), C::new(0.0, 10.0)]);
        assert_eq!(spec.amplified(Some(C::new(0.0, 0.0)), I)(C::new(0.0, 0.0)), [C::new(5.0, 0.0), C::new(0.0, 5.0)]);
    }

    #[test]
    fn pre_approximation_floor() {
        let col = Collar::new(C::new(0.0, 0.0), 0.8, 1.0);
        let one = |_: C| 1.0;
        for m in [3, 4] {
            let spec = make_labyrinth(col, Chart::fitted(&col, m, DEFAULT_FILL), m, &flat(&col)).unwrap();
            let sigma2 = target_density(&spec, None, I, &one);
            let pts = spec.sector_points(3, 0.01);
            assert!(pts.iter().all(|&z| spec.sector_of(z).is_some()));
            assert!(pts.iter().all(|&z| sigma2(z) >= spec.density_floor()));
        }
    }

    #[test]
    fn flat_crossing_and_homogeneity() {
        let col = Collar::new(C::new(0.0, 0.0), 0.5, 1.0);
        let l1 = collar_crossing(&col, &|_| 1.0, 0.01).unwrap();
        assert!((l1 - 0.5).abs() <= 0.09 * 0.5);
        let l3 = collar_crossing(&col, &|_| 9.0, 0.01).unwrap();
        assert!((l3 - 3.0 * l1).abs() < 1e-12);
    }

    #[test]
    fn sector_avoiding_paths_wind() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let m = 3;
        let spec = make_labyrinth(col, Chart::identity(col.center), m, &flat(&col)).unwrap();
        let walls = |z: C| if spec.sector_of(z).is_some() { 1e12 } else { 1.0 };
        let len = crossing_length(&spec, &walls, spec.grid_spacing()).unwrap();
        assert!(len > m as f64 * 0.2, "{len}");
        assert!(len < 1e5, "a corridor path exists: {len}");
    }

    #[test]
    fn spacing_guard() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let spec = make_labyrinth(col, Chart::identity(col.center), 3, &flat(&col)).unwrap();
        assert!(matches!(
            crossing_length(&spec, &|_| 1.0, 2.0 * spec.grid_spacing()),
            Err(Error::SpacingTooCoarse { .. })
        ));
    }

    #[test]
    fn choose_m_search() {
        let growth = |m: u32| Ok(0.3 * (m * m) as f64);
        let c = choose_m(0.1, 8, Some(0.2), growth).unwrap();
        assert!(c.m == 2 && !c.amplified);
        let base = growth(3).unwrap();
        let c = choose_m(2.0 * base, 8, Some(0.0), growth).unwrap();
        assert!((4..=6).contains(&c.m) && c.amplified);
        assert!(c.log.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(matches!(choose_m(1e6, 8, None, growth), Err(Error::TargetUnreachable { m_max: 8, .. })));
    }

    #[test]
    fn svg_has_one_path_per_sector() {
        let col = Collar::new(C::new(0.0, 0.0), 0.2, 1.0);
        let spec = make_labyrinth(col, Chart::identity(col.center), 3, &flat(&col)).unwrap();
        let svg = spec.to_svg(400.0);
        assert_eq!(svg.matches("<path").count(), 18);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
