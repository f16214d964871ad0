//! Finite exhaustion by concentric scalings of the domain.

use serde::Serialize;

use crate::corrector::{zero_preserving_approx, ApproxRequest, Tolerances};
use crate::domain::{build_grid, homology_basis, CircularDomain, Cycle};
use crate::geodesic::{distance_to_boundary, WeightedGraph};
use crate::holo::{period, HoloForm};
use crate::labyrinth::{
    choose_m, crossing_length, labyrinth_target, make_labyrinth, target_density, Chart, Collar, LabyrinthSpec,
    DEFAULT_FILL,
};
use crate::weierstrass::certification_samples;
use crate::{Error, Result, C};

/// Ratio between consecutive outer radii of a disc exhaustion.
pub const DISC_STAGE_RATIO: f64 = 2.5;
/// `d₀` as a fraction of the measured stage-one distance.
pub const DEFAULT_D0_FRACTION: f64 = 0.4;
pub const QUADRATIC_TOL: f64 = 1e-11;

/// Numerical settings shared by every stage.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageSettings {
    /// Lattice spacing for distances, relative to the outer radius of the stage.
    pub relative_spacing: f64,
    pub m_max: u32,
    /// Laurent degrees `(k_neg, k_pos)` of the stage approximation.
    pub degrees: (usize, usize),
    pub tol: Tolerances,
    pub quadratic_tol: f64,
    pub d0_fraction: f64,
}

impl Default for StageSettings {
    fn default() -> Self {
        StageSettings {
            relative_spacing: 0.01,
            m_max: 8,
            degrees: (8, 40),
            tol: Tolerances::default(),
            quadratic_tol: QUADRATIC_TOL,
            d0_fraction: DEFAULT_D0_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustionPlan {
    pub stages: Vec<CircularDomain>,
    pub fractions: Vec<f64>,
    pub epsilon: f64,
    pub base_point: C,
    pub settings: StageSettings,
}

impl ExhaustionPlan {
    /// `N` nested scalings `M_n = domain.scaled(t_n)` ending at `t_N = 1`.
    /// Discs use `t_n = 2.5^{n−N}`; domains with holes use evenly spaced
    /// fractions above the smallest valid scaling.
    pub fn concentric(domain: &CircularDomain, count: usize, epsilon: f64, base_point: C) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("an exhaustion needs at least one stage".into()));
        }
        let fractions: Vec<f64> = if domain.holes.is_empty() {
            (1..=count).map(|n| DISC_STAGE_RATIO.powi(n as i32 - count as i32)).collect()
        } else {
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if domain.scaled(mid).is_ok() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let step = (1.0 - hi) / (count as f64 + 1.0);
            (1..=count).map(|n| 1.0 - (count - n) as f64 * step).collect()
        };
        Self::from_fractions(domain, &fractions, epsilon, base_point)
    }

    pub fn from_fractions(domain: &CircularDomain, fractions: &[f64], epsilon: f64, base_point: C) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if fractions.last() != Some(&1.0) || fractions.windows(2).any(|w| !(w[0] < w[1])) || !(fractions[0] > 0.0) {
            return Err(Error::Config("stage fractions must increase strictly to 1".into()));
        }
        let stages = fractions
            .iter()
            .map(|&t| if t == 1.0 { Ok(domain.clone()) } else { domain.scaled(t) })
            .collect::<Result<Vec<_>>>()?;
        if !stages[0].contains(base_point) {
            return Err(Error::Config("base point lies outside the first stage".into()));
        }
        Ok(ExhaustionPlan {
            stages,
            fractions: fractions.to_vec(),
            epsilon,
            base_point,
            settings: StageSettings::default(),
        })
    }

    pub fn with_settings(mut self, settings: StageSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn domain(&self) -> &CircularDomain {
        self.stages.last().expect("plan has stages")
    }

    /// `ε/2ⁿ` for the 1-based stage `n`.
    pub fn budget(&self, n: usize) -> f64 {
        self.epsilon / 2f64.powi(n as i32)
    }

    pub fn spacing(&self, n: usize) -> f64 {
        let d = &self.stages[n - 1];
        (self.settings.relative_spacing * d.outer_radius).min(d.min_gap() / 4.5)
    }

    /// Collar annuli of `M_n ∖ M_{n−1}`, one per boundary circle.
    pub fn collars(&self, n: usize) -> Vec<Collar> {
        let (inner, outer) = (&self.stages[n - 2], &self.stages[n - 1]);
        let mut out = vec![Collar::new(outer.outer_center, inner.outer_radius, outer.outer_radius)];
        for (a, b) in outer.holes.iter().zip(&inner.holes) {
            out.push(Collar::new(a.center, a.radius, b.radius));
        }
        out
    }
}

/// What the stage did to the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageAction {
    /// Stage one: the seed itself.
    Seed,
    /// The unamplified pair already exceeds the distance target on `M_n`.
    PassThrough,
    /// Labyrinth amplification followed by approximation.
    Labyrinth,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageLog {
    pub stage: usize,
    pub outer_radius: f64,
    pub action: StageAction,
    pub m: Option<u32>,
    pub m_search: Vec<(u32, f64)>,
    pub sup_deviation: f64,
    pub deviation_budget: f64,
    pub quadratic_residual: f64,
    pub period_residual: f64,
    pub distance: f64,
    pub distance_target: f64,
    /// Minimum of `σ²` over the stage samples.
    pub density_floor: f64,
    pub newton_iterations: usize,
}

impl StageLog {
    /// Whether the measured distance clears `2ⁿ·d₀`.
    pub fn distance_ok(&self) -> bool {
        self.distance > self.distance_target
    }
}

#[derive(Debug, Clone)]
pub struct ExhaustionResult {
    pub psi1: HoloForm,
    pub psi2: HoloForm,
    pub d0: f64,
    pub log: Vec<StageLog>,
}

/// The quadratic relation of the pair: `Θ` for case A, `None` for the
/// β-locked case B where `ψ₂ = βψ₁`.
#[derive(Debug, Clone)]
pub struct PairRelation {
    pub theta: Option<HoloForm>,
    pub beta: C,
}

impl PairRelation {
    fn theta_at(&self, z: C) -> Result<C> {
        match &self.theta {
            Some(t) => t.eval(z),
            None => Ok(C::new(0.0, 0.0)),
        }
    }
}

type Aux<'a> = &'a (dyn Fn(C) -> f64 + Sync);

/// Shortest `σ`-distance from `p0` to the boundary of `domain`, where
/// `sigma2` is evaluated at lattice nodes and edge midpoints.
pub fn conformal_distance(domain: &CircularDomain, p0: C, spacing: f64, sigma2: Aux) -> Result<f64> {
    let grid = build_grid(domain, spacing)?;
    let sigma = |z: C| sigma2(z).max(0.0).sqrt();
    let graph = WeightedGraph::new(&grid, &sigma);
    Ok(distance_to_boundary(&graph, p0))
}

fn pair_density<'a>(psi1: &'a HoloForm, psi2: &'a HoloForm, aux: Aux<'a>) -> impl Fn(C) -> f64 + Sync + 'a {
    move |z| match (psi1.eval(z), psi2.eval(z)) {
        (Ok(a), Ok(b)) => a.norm_sqr() + b.norm_sqr() + aux(z),
        _ => f64::INFINITY,
    }
}

/// `sup |ψ₁² + ψ₂² − Θ| / (1 + |Θ|)` over `points`.
pub fn quadratic_residual(psi1: &HoloForm, psi2: &HoloForm, rel: &PairRelation, points: &[C]) -> Result<f64> {
    let a = psi1.eval_many(points)?;
    let b = psi2.eval_many(points)?;
    let mut worst = 0.0_f64;
    for k in 0..points.len() {
        let t = rel.theta_at(points[k])?;
        worst = worst.max((a[k] * a[k] + b[k] * b[k] - t).norm() / (1.0 + t.norm()));
    }
    Ok(worst)
}

/// `max_γ |∮_γ ψ − target| / (1 + |target|)`.
pub fn period_residual(psi1: &HoloForm, psi2: &HoloForm, cycles: &[Cycle], targets: &[[C; 2]]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (c, t) in cycles.iter().zip(targets) {
        for (f, target) in [(psi1, t[0]), (psi2, t[1])] {
            worst = worst.max((period(f, c)? - target).norm() / (1.0 + target.norm()));
        }
    }
    Ok(worst)
}

fn sup_pair_deviation(old: (&HoloForm, &HoloForm), new: (&HoloForm, &HoloForm), points: &[C]) -> Result<f64> {
    let (a0, b0) = (old.0.eval_many(points)?, old.1.eval_many(points)?);
    let (a1, b1) = (new.0.eval_many(points)?, new.1.eval_many(points)?);
    Ok((0..points.len())
        .map(|k| ((a1[k] - a0[k]).norm_sqr() + (b1[k] - b0[k]).norm_sqr()).sqrt())
        .fold(0.0, f64::max))
}

fn stage_failed(stage: usize, cause: Error) -> Error {
    match cause {
        e @ Error::StageFailed { .. } => e,
        e => Error::StageFailed { stage, cause: Box::new(e) },
    }
}

struct Checks {
    quadratic: f64,
    period: f64,
    floor: f64,
}

fn stage_checks(
    plan: &ExhaustionPlan,
    n: usize,
    pair: (&HoloForm, &HoloForm),
    rel: &PairRelation,
    targets: &[[C; 2]],
    aux: Aux,
) -> Result<Checks> {
    let dom = &plan.stages[n - 1];
    let pts = certification_samples(dom);
    let quadratic = quadratic_residual(pair.0, pair.1, rel, &pts)?;
    let period = period_residual(pair.0, pair.1, &homology_basis(dom), targets)?;
    if quadratic > plan.settings.quadratic_tol {
        return Err(Error::ResidualTooLarge { residual: quadratic, tol: plan.settings.quadratic_tol });
    }
    if period > plan.settings.tol.period_tol {
        return Err(Error::ResidualTooLarge { residual: period, tol: plan.settings.tol.period_tol });
    }
    let density = pair_density(pair.0, pair.1, aux);
    let floor = pts.iter().map(|&z| density(z)).fold(f64::INFINITY, f64::min);
    Ok(Checks { quadratic, period, floor })
}

/// Labyrinths of resolution `m` on every collar of stage `n`.
pub fn stage_labyrinths(plan: &ExhaustionPlan, n: usize, m: u32, aux: Aux) -> Result<Vec<LabyrinthSpec>> {
    plan.collars(n)
        .into_iter()
        .map(|col| {
            let samples: Vec<(C, f64)> = col.samples(9, 128).into_iter().map(|z| (z, aux(z))).collect();
            make_labyrinth(col, Chart::fitted(&col, m, DEFAULT_FILL), m, &samples)
        })
        .collect()
}

/// Runs stages `1..=N`, calling `on_stage` after each completed stage.
pub fn run_exhaustion(
    seed: (HoloForm, HoloForm),
    rel: &PairRelation,
    aux: Aux,
    targets: &[[C; 2]],
    plan: &ExhaustionPlan,
    on_stage: &mut dyn FnMut(&StageLog),
) -> Result<ExhaustionResult> {
    let (mut psi1, mut psi2) = seed;
    let p0 = plan.base_point;
    let mut log = Vec::with_capacity(plan.len());

    let checks = stage_checks(plan, 1, (&psi1, &psi2), rel, targets, aux).map_err(|e| stage_failed(1, e))?;
    let d1 = conformal_distance(&plan.stages[0], p0, plan.spacing(1), &pair_density(&psi1, &psi2, aux))
        .map_err(|e| stage_failed(1, e))?;
    let d0 = plan.settings.d0_fraction * d1;
    let first = StageLog {
        stage: 1,
        outer_radius: plan.stages[0].outer_radius,
        action: StageAction::Seed,
        m: None,
        m_search: Vec::new(),
        sup_deviation: 0.0,
        deviation_budget: plan.budget(1),
        quadratic_residual: checks.quadratic,
        period_residual: checks.period,
        distance: d1,
        distance_target: 2.0 * d0,
        density_floor: checks.floor,
        newton_iterations: 0,
    };
    if !first.distance_ok() {
        return Err(stage_failed(1, Error::TargetUnreachable { m_max: 0, best: d1, target: first.distance_target }));
    }
    on_stage(&first);
    log.push(first);

    for n in 2..=plan.len() {
        let entry = run_stage(plan, n, (&psi1, &psi2), rel, aux, targets, d0, log[n - 2].distance)
            .map_err(|e| stage_failed(n, e))?;
        let (log_entry, next) = entry;
        if let Some((a, b)) = next {
            psi1 = a;
            psi2 = b;
        }
        on_stage(&log_entry);
        log.push(log_entry);
    }
    Ok(ExhaustionResult { psi1, psi2, d0, log })
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    plan: &ExhaustionPlan,
    n: usize,
    pair: (&HoloForm, &HoloForm),
    rel: &PairRelation,
    aux: Aux,
    targets: &[[C; 2]],
    d0: f64,
    previous_distance: f64,
) -> Result<(StageLog, Option<(HoloForm, HoloForm)>)> {
    let p0 = plan.base_point;
    let dom = &plan.stages[n - 1];
    let target = 2f64.powi(n as i32) * d0;
    let unamplified = conformal_distance(dom, p0, plan.spacing(n), &pair_density(pair.0, pair.1, aux))?;
    let theta_ref = rel.theta.as_ref();
    let measure = |m: u32| -> Result<f64> {
        let specs = stage_labyrinths(plan, n, m, aux)?;
        let mut best = f64::INFINITY;
        for spec in &specs {
            let sigma2 = target_density(spec, theta_ref, rel.beta, aux);
            best = best.min(crossing_length(spec, &sigma2, spec.grid_spacing())?);
        }
        Ok(previous_distance + best)
    };
    let choice = choose_m(target, plan.settings.m_max, Some(unamplified), measure)?;

    let (action, new_pair, iterations) = if !choice.amplified {
        (StageAction::PassThrough, None, 0)
    } else {
        let specs = stage_labyrinths(plan, n, choice.m, aux)?;
        let inner = &plan.stages[n - 2];
        let m_points = certification_samples(inner);
        let mut samples = Vec::new();
        for spec in &specs {
            let step = 0.5 * spec.grid_spacing() * 8.0;
            let sector_points = spec.sector_points(3, step);
            let part = labyrinth_target(spec, theta_ref, rel.beta, pair, if samples.is_empty() { &m_points } else { &[] }, &sector_points)?;
            samples.extend(part);
        }
        let req = ApproxRequest {
            samples,
            weights: None,
            domain: dom.clone(),
            cycles: homology_basis(dom),
            targets: targets.to_vec(),
            theta: rel.theta.clone(),
            beta: rel.beta,
            degrees: plan.settings.degrees,
            tol: plan.settings.tol,
        };
        let out = zero_preserving_approx(&req)?;
        let iters = out.solution.iterations;
        (StageAction::Labyrinth, Some((out.psi1, out.psi2)), iters)
    };

    let (p1, p2) = match &new_pair {
        Some((a, b)) => (a, b),
        None => pair,
    };
    let budget = plan.budget(n);
    let deviation = match &new_pair {
        Some(_) => sup_pair_deviation(pair, (p1, p2), &certification_samples(&plan.stages[n - 2]))?,
        None => 0.0,
    };
    if deviation > budget {
        return Err(Error::ResidualTooLarge { residual: deviation, tol: budget });
    }
    let checks = stage_checks(plan, n, (p1, p2), rel, targets, aux)?;
    let distance = match &new_pair {
        Some(_) => conformal_distance(dom, p0, plan.spacing(n), &pair_density(p1, p2, aux))?,
        None => unamplified,
    };
    if !(distance > target) {
        return Err(Error::TargetUnreachable { m_max: plan.settings.m_max, best: distance, target });
    }
    let log = StageLog {
        stage: n,
        outer_radius: dom.outer_radius,
        action,
        m: choice.amplified.then_some(choice.m),
        m_search: choice.log,
        sup_deviation: deviation,
        deviation_budget: budget,
        quadratic_residual: checks.quadratic,
        period_residual: checks.period,
        distance,
        distance_target: target,
        density_floor: checks.floor,
        newton_iterations: iterations,
    };
    Ok((log, new_pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::I;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn caseb() -> PairRelation {
        PairRelation { theta: None, beta: I }
    }

    #[test]
    fn plan_shapes() {
        let disc = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        let p = ExhaustionPlan::concentric(&disc, 3, 0.1, c(0.0, 0.0)).unwrap();
        assert_eq!(p.fractions, vec![0.16, 0.4, 1.0]);
        assert!((p.budget(2) - 0.025).abs() < 1e-15);
        assert_eq!(p.collars(3)[0], Collar::new(c(0.0, 0.0), 0.4, 1.0));
        let ann = CircularDomain::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap();
        let q = ExhaustionPlan::concentric(&ann, 3, 0.1, c(1.0, 0.0)).unwrap();
        for w in q.stages.windows(2) {
            assert!(w[0].outer_radius < w[1].outer_radius && w[0].holes[0].radius > w[1].holes[0].radius);
        }
        assert_eq!(q.collars(2).len(), 2);
        assert!(ExhaustionPlan::from_fractions(&disc, &[0.5, 0.4, 1.0], 0.1, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn single_stage_returns_seed() {
        let disc = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        let plan = ExhaustionPlan::concentric(&disc, 1, 0.1, c(0.0, 0.0)).unwrap();
        let seed = (HoloForm::dz(), HoloForm::dz().scale(I));
        let r = run_exhaustion(seed.clone(), &caseb(), &|_| 2.0, &[], &plan, &mut |_| {}).unwrap();
        assert_eq!((r.psi1, r.psi2), seed);
        assert_eq!(r.log.len(), 1);
        assert!((r.log[0].distance - 2.0).abs() < 0.2);
    }

    #[test]
    fn flat_ladder_on_disc() {
        let disc = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        let plan = ExhaustionPlan::concentric(&disc, 3, 0.1, c(0.0, 0.0)).unwrap();
        let seed = (HoloForm::dz(), HoloForm::dz().scale(I));
        let mut seen = 0;
        let r = run_exhaustion(seed, &caseb(), &|_| 2.0, &[], &plan, &mut |_| seen += 1).unwrap();
        assert_eq!(seen, 3);
        for s in &r.log {
            assert!(s.distance_ok(), "{s:?}");
            assert!(s.sup_deviation <= s.deviation_budget);
            assert!(s.quadratic_residual <= 1e-15);
        }
        assert!(r.log.windows(2).all(|w| w[0].distance < w[1].distance));
        assert_eq!(r.log[1].action, StageAction::PassThrough);
    }

    #[test]
    fn seed_violating_relation_fails_stage_one() {
        let disc = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        let plan = ExhaustionPlan::concentric(&disc, 2, 0.1, c(0.0, 0.0)).unwrap();
        let seed = (HoloForm::dz(), HoloForm::dz());
        let e = run_exhaustion(seed, &caseb(), &|_| 2.0, &[], &plan, &mut |_| {}).unwrap_err();
        assert!(matches!(e, Error::StageFailed { stage: 1, .. }));
    }

    #[test]
    fn labyrinth_stage_reports_failure() {
        // Slow radial growth forces the labyrinth; its approximation cannot
        // stay within the stage budget, which surfaces as a stage failure.
        let disc = CircularDomain::disc(c(0.0, 0.0), 0.6).unwrap();
        let mut plan = ExhaustionPlan::from_fractions(&disc, &[0.5 / 0.6, 1.0], 0.1, c(0.0, 0.0)).unwrap();
        plan.settings.m_max = 3;
        plan.settings.degrees = (0, 24);
        let seed = (HoloForm::dz(), HoloForm::dz().scale(I));
        let mut logs = Vec::new();
        let e = run_exhaustion(seed, &caseb(), &|_| 2.0, &[], &plan, &mut |s| logs.push(s.stage)).unwrap_err();
        assert!(matches!(e, Error::StageFailed { stage: 2, .. }), "{e}");
        assert_eq!(logs, vec![1]);
    }
}
