//! Recipes assembling complete Weierstrass tuples.

use serde::{Deserialize, Serialize};

use crate::corrector::{solve, CorrectorProblem, Mode};
use crate::domain::{homology_basis, CircularDomain};
use crate::holo::{period, HoloForm, HoloFunction};
use crate::weierstrass::{certification_samples, flux, hopf_differential, metric_density, WeierstrassTuple};
use crate::{Error, Result, C, I};

use super::exhaustion::{run_exhaustion, ExhaustionPlan, ExhaustionResult, PairRelation, StageLog};

/// Conformality bound for minimal recipes.
pub const CONFORMALITY_TOL: f64 = 1e-11;
const COMPATIBILITY_TOL: f64 = 1e-8;
const ZERO_THETA_TOL: f64 = 1e-13;

/// Prescribed coordinates `h₃..h_n` through their forms `ψ_i` (with
/// `h_i = h_i(P₀) + Re ∫ ψ_i`) and base values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrescribedMap {
    pub forms: Vec<HoloForm>,
    pub base_values: Vec<f64>,
    #[serde(default = "yes")]
    pub harmonic: bool,
}

fn yes() -> bool {
    true
}

impl PrescribedMap {
    pub fn new(forms: Vec<HoloForm>, base_values: Vec<f64>) -> Result<Self> {
        if forms.is_empty() || forms.len() != base_values.len() {
            return Err(Error::Config(format!("{} forms with {} base values", forms.len(), base_values.len())));
        }
        Ok(PrescribedMap { forms, base_values, harmonic: true })
    }

    /// `h(z) = (Re z, Im z)`, i.e. forms `dz` and `−i dz`.
    pub fn coordinate_plane(p0: C) -> Self {
        PrescribedMap { forms: vec![HoloForm::dz(), HoloForm::dz().scale(-I)], base_values: vec![p0.re, p0.im], harmonic: true }
    }

    pub fn dimension(&self) -> usize {
        self.forms.len() + 2
    }

    /// `𝓘 = Σ|ψ_i|²`.
    pub fn aux_density(&self) -> impl Fn(C) -> f64 + Sync + '_ {
        move |z| self.forms.iter().map(|f| f.eval(z).map(|v| v.norm_sqr()).unwrap_or(f64::INFINITY)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCase {
    CaseA,
    CaseB,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecipeAudit {
    /// `sup |Σψ_j² − 𝔥| / max(1, |𝔥|)`.
    pub hopf_residual: f64,
    /// `max |Im ∮ψ_j − 𝚙_j|` over cycles and coordinates.
    pub flux_residual: f64,
    /// `sup |Σψ_j²| / Σ|ψ_j|²` for minimal recipes.
    pub conformality_residual: Option<f64>,
    /// Minimum of `Σ|ψ_j|²` over the samples.
    pub density_floor: f64,
}

#[derive(Debug, Clone)]
pub struct RecipeOutput {
    pub tuple: WeierstrassTuple,
    pub base_values: Vec<f64>,
    pub case: PairCase,
    pub lambdas: Vec<C>,
    pub exhaustion: Option<ExhaustionResult>,
    pub audit: RecipeAudit,
    pub notes: Vec<String>,
}

fn check_flux_shape(flux_targets: &[Vec<f64>], nu: usize, n: usize) -> Result<()> {
    if flux_targets.len() != nu || flux_targets.iter().any(|v| v.len() != n) {
        return Err(Error::IncompatibleTargets(format!("flux targets must be {nu} vectors of length {n}")));
    }
    Ok(())
}

fn audit(tuple: &WeierstrassTuple, flux_targets: &[Vec<f64>], minimal: bool) -> Result<RecipeAudit> {
    let pts = certification_samples(&tuple.domain);
    let q = hopf_differential(tuple, &pts)?;
    let h = tuple.hopf_target.eval_many(&pts)?;
    let hopf_residual = q.iter().zip(&h).map(|(q, h)| (q - h).norm() / h.norm().max(1.0)).fold(0.0, f64::max);
    let got = flux(tuple, &homology_basis(&tuple.domain))?;
    let mut flux_residual = 0.0_f64;
    for (g, t) in got.iter().zip(flux_targets) {
        for (a, b) in g.iter().zip(t) {
            flux_residual = flux_residual.max((a - b).abs());
        }
    }
    let dens = metric_density(tuple, None, &pts)?;
    let density_floor = dens.iter().copied().fold(f64::INFINITY, f64::min);
    let conformality_residual = minimal.then(|| q.iter().zip(&dens).map(|(q, d)| q.norm() / d).fold(0.0, f64::max));
    Ok(RecipeAudit { hopf_residual, flux_residual, conformality_residual, density_floor })
}

fn is_zero_on(form: &HoloForm, scale: f64, pts: &[C]) -> Result<bool> {
    Ok(form.eval_many(pts)?.iter().all(|v| v.norm() <= ZERO_THETA_TOL * (1.0 + scale)))
}

/// `exp(Σ_h κ r_h/(z − c_h)) dz` with `κ = 0.3`. Plain `dz` is a degenerate
/// seed when `Θ` is constant, since `η − Θ/η` then vanishes.
pub fn default_eta_seed(domain: &CircularDomain) -> HoloForm {
    let f = domain.holes.iter().fold(HoloFunction::zero(), |acc, h| {
        acc + HoloFunction::inverse_power(h.center, 1).scale(C::new(0.3 * h.radius, 0.0))
    });
    HoloForm::dz().exp_scale(&f)
}

/// Harmonic map with prescribed coordinates `h`, Hopf differential `𝔥`
/// (as `𝔥/dz²`) and flux `𝚙`.
pub fn recipe_harmonic(
    h: &PrescribedMap,
    hopf: &HoloForm,
    flux_targets: &[Vec<f64>],
    plan: &ExhaustionPlan,
    eta_seed: Option<HoloForm>,
    on_stage: &mut dyn FnMut(&StageLog),
) -> Result<RecipeOutput> {
    let domain = plan.domain();
    let cycles = homology_basis(domain);
    let n = h.dimension();
    check_flux_shape(flux_targets, cycles.len(), n)?;
    let pts = certification_samples(domain);
    let mut scale = hopf.eval_many(&pts)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut nonconstant = false;
    for (i, f) in h.forms.iter().enumerate() {
        let vals = f.eval_many(&pts)?;
        let top = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        nonconstant |= top > 0.0;
        scale += top * top;
        for (k, cy) in cycles.iter().enumerate() {
            let p = period(f, cy)?;
            let want = flux_targets[k][i + 2];
            if (p.im - want).abs() > COMPATIBILITY_TOL * (1.0 + want.abs()) || p.re.abs() > COMPATIBILITY_TOL * (1.0 + p.norm()) {
                return Err(Error::IncompatibleTargets(format!(
                    "coordinate {} on cycle {k}: period {p} does not match flux {want}",
                    i + 3
                )));
            }
        }
    }
    if !nonconstant {
        return Err(Error::IncompatibleTargets("prescribed map is constant".into()));
    }
    let sum_sq = h.forms.iter().fold(HoloForm::zero(), |acc, f| acc + f.product(f));
    let theta = hopf - &sum_sq;
    let targets: Vec<[C; 2]> = flux_targets.iter().map(|p| [I * p[0], I * p[1]]).collect();
    let m1 = plan.stages[0].clone();
    let stage_cycles = homology_basis(&m1);
    let (rel, mode, case) = if is_zero_on(&theta, scale, &pts)? {
        if flux_targets.iter().any(|p| p[0] != 0.0 || p[1] != 0.0) {
            return Err(Error::IncompatibleTargets("the first two fluxes must vanish when the quadratic relation is zero".into()));
        }
        let rel = PairRelation { theta: None, beta: I };
        (rel, Mode::CaseB { phi1_seed: HoloForm::dz(), beta: I }, PairCase::CaseB)
    } else {
        let eta = eta_seed.unwrap_or_else(|| default_eta_seed(domain));
        let rel = PairRelation { theta: Some(theta.clone()), beta: I };
        (rel, Mode::CaseA { theta, eta_seed: eta }, PairCase::CaseA)
    };
    let problem = CorrectorProblem::new(m1, stage_cycles, mode, targets.clone())?.with_tolerances(plan.settings.tol);
    let seed = solve(&problem)?;
    let aux = h.aux_density();
    let result = run_exhaustion((seed.psi1, seed.psi2), &rel, &aux, &targets, plan, on_stage)?;
    let mut forms = vec![result.psi1.clone(), result.psi2.clone()];
    forms.extend(h.forms.iter().cloned());
    let tuple = WeierstrassTuple::new(forms, plan.base_point, hopf.clone(), domain.clone())?;
    let audit = audit(&tuple, flux_targets, false)?;
    let mut base_values = vec![0.0, 0.0];
    base_values.extend(&h.base_values);
    Ok(RecipeOutput { tuple, base_values, case, lambdas: Vec::new(), exhaustion: Some(result), audit, notes: Vec::new() })
}

/// Conformal minimal immersion extending `h`: the harmonic recipe with `𝔥 = 0`.
pub fn recipe_minimal(
    h: &PrescribedMap,
    flux_targets: &[Vec<f64>],
    plan: &ExhaustionPlan,
    on_stage: &mut dyn FnMut(&StageLog),
) -> Result<RecipeOutput> {
    let mut out = recipe_harmonic(h, &HoloForm::zero(), flux_targets, plan, None, on_stage)?;
    out.audit = audit(&out.tuple, flux_targets, true)?;
    Ok(out)
}

pub const NON_PROPERNESS_NOTE: &str =
    "non-properness of the limit immersion is a theorem-level claim and is not numerically certified";

/// Minimal surface in ℝ⁴ whose last two coordinates are `z` itself.
pub fn recipe_cm_embedding(plan: &ExhaustionPlan, on_stage: &mut dyn FnMut(&StageLog)) -> Result<RecipeOutput> {
    let h = PrescribedMap::coordinate_plane(plan.base_point);
    let zeros = vec![vec![0.0; 4]; plan.domain().nu()];
    let mut out = recipe_minimal(&h, &zeros, plan, on_stage)?;
    out.notes.push("injectivity certified by the coordinate pair (X3, X4) = (Re z, Im z)".into());
    out.notes.push(NON_PROPERNESS_NOTE.into());
    Ok(out)
}

/// Default `λ_j`: `Σλ_j² = 0` for even `n`, `Σλ_j² = −1` for odd `n`.
pub fn default_lambdas(n: usize) -> Vec<C> {
    let k = n / 2;
    let root = |j: usize, m: usize| C::from_polar(1.0, std::f64::consts::PI * j as f64 / m as f64);
    if n % 2 == 0 {
        (0..k).map(|j| root(j, k)).collect()
    } else {
        match k {
            1 => vec![I],
            2 => vec![I * 2f64.sqrt(), C::new(1.0, 0.0)],
            _ => (0..k)
                .map(|j| (C::new(-1.0 / k as f64, 0.0) + root(2 * j, k) * 0.5).sqrt())
                .collect(),
        }
    }
}

/// Rate of the exponential twist separating pair `j` (0-based).
fn twist(j: usize) -> f64 {
    0.4 * (j + 1) as f64
}

/// Conformal minimal data whose Gauss map omits the hyperplanes
/// `w_{2j−1} ± i w_{2j} = 0` (and `w_n = 0` for odd `n`).
pub fn recipe_gauss_omit(
    n: usize,
    flux_targets: &[Vec<f64>],
    plan: &ExhaustionPlan,
    lambdas: Option<Vec<C>>,
) -> Result<RecipeOutput> {
    if n < 3 {
        return Err(Error::Config(format!("dimension must be at least 3, got {n}")));
    }
    let domain = plan.domain();
    let cycles = homology_basis(domain);
    check_flux_shape(flux_targets, cycles.len(), n)?;
    let k = n / 2;
    let lambdas = lambdas.unwrap_or_else(|| default_lambdas(n));
    let wanted = if n % 2 == 0 { 0.0 } else { -1.0 };
    let sum: C = lambdas.iter().map(|l| l * l).sum();
    if lambdas.len() != k || lambdas.iter().any(|l| l.norm() == 0.0) || (sum - wanted).norm() > 1e-12 {
        return Err(Error::IncompatibleTargets(format!("lambdas must be {k} nonzero values with squares summing to {wanted}")));
    }
    let tol = plan.settings.tol;
    let phi = if n % 2 == 1 {
        let t: Vec<[C; 2]> = flux_targets.iter().map(|p| [I * p[n - 1], C::new(-p[n - 1], 0.0)]).collect();
        let prob = CorrectorProblem::new(domain.clone(), cycles.clone(), Mode::CaseB { phi1_seed: HoloForm::dz(), beta: I }, t)?
            .with_tolerances(tol);
        solve(&prob)?.psi1
    } else {
        HoloForm::dz()
    };
    let square = phi.product(&phi);
    let radius = domain.outer_radius;
    let pairs: Vec<(HoloForm, HoloForm)> = (0..k)
        .map(|j| {
            let lam = lambdas[j];
            let g = (HoloFunction::z() - HoloFunction::constant(domain.outer_center)).scale(C::new(twist(j) / radius, 0.0));
            let mode = Mode::CaseA { theta: square.scale(lam * lam), eta_seed: phi.scale(lam).exp_scale(&g) };
            let t: Vec<[C; 2]> = flux_targets.iter().map(|p| [I * p[2 * j], I * p[2 * j + 1]]).collect();
            let prob = CorrectorProblem::new(domain.clone(), cycles.clone(), mode, t)?.with_tolerances(tol);
            let s = solve(&prob)?;
            Ok((s.psi1, s.psi2))
        })
        .collect::<Result<_>>()?;
    let mut forms = Vec::with_capacity(n);
    for (a, b) in pairs {
        forms.push(a);
        forms.push(b);
    }
    if n % 2 == 1 {
        forms.push(phi);
    }
    let tuple = WeierstrassTuple::new(forms, plan.base_point, HoloForm::zero(), domain.clone())?;
    let audit = audit(&tuple, flux_targets, true)?;
    Ok(RecipeOutput {
        tuple,
        base_values: vec![0.0; n],
        case: PairCase::CaseA,
        lambdas,
        exhaustion: None,
        audit,
        notes: vec!["built on the full domain in one step; no exhaustion ladder".into()],
    })
}

/// The hyperplanes avoided by `recipe_gauss_omit`: `Π_{j,δ}` then `Π` for odd `n`.
pub fn omitted_hyperplanes(n: usize) -> Vec<(String, Vec<C>)> {
    let mut out = Vec::new();
    for j in 0..n / 2 {
        for (delta, sign) in [(0, 1.0), (1, -1.0)] {
            let mut h = vec![C::new(0.0, 0.0); n];
            h[2 * j] = C::new(1.0, 0.0);
            h[2 * j + 1] = I * sign;
            out.push((format!("pi_{}_{}", j + 1, delta), h));
        }
    }
    if n % 2 == 1 {
        let mut h = vec![C::new(0.0, 0.0); n];
        h[n - 1] = C::new(1.0, 0.0);
        out.push(("pi_last".to_string(), h));
    }
    out
}

pub fn domain_zero_flux(domain: &CircularDomain, n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; domain.nu()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn disc_plan(stages: usize) -> ExhaustionPlan {
        let d = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        ExhaustionPlan::concentric(&d, stages, 0.1, c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn lambda_sums() {
        for n in 3..=8 {
            let l = default_lambdas(n);
            let s: C = l.iter().map(|x| x * x).sum();
            let want = if n % 2 == 0 { 0.0 } else { -1.0 };
            assert!((s - want).norm() < 1e-14, "n={n}");
            assert!(l.iter().all(|x| x.norm() > 0.1));
        }
        assert_eq!(default_lambdas(4), vec![c(1.0, 0.0), C::from_polar(1.0, std::f64::consts::FRAC_PI_2)]);
        assert_eq!(default_lambdas(3), vec![I]);
    }

    #[test]
    fn coordinate_plane_gives_case_b() {
        let plan = disc_plan(1);
        let out = recipe_minimal(&PrescribedMap::coordinate_plane(c(0.0, 0.0)), &[], &plan, &mut |_| {}).unwrap();
        assert_eq!(out.case, PairCase::CaseB);
        assert!(out.audit.hopf_residual < 1e-10);
        assert!(out.audit.conformality_residual.unwrap() <= CONFORMALITY_TOL);
        assert!(out.audit.density_floor > 0.0);
    }

    #[test]
    fn constant_map_rejected() {
        let plan = disc_plan(1);
        let h = PrescribedMap::new(vec![HoloForm::zero(), HoloForm::zero()], vec![1.0, 2.0]).unwrap();
        assert!(matches!(recipe_minimal(&h, &[], &plan, &mut |_| {}), Err(Error::IncompatibleTargets(_))));
    }

    #[test]
    fn zero_theta_needs_zero_leading_flux() {
        let d = CircularDomain::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap();
        let plan = ExhaustionPlan::concentric(&d, 1, 0.1, c(1.0, 0.0)).unwrap();
        let h = PrescribedMap::coordinate_plane(c(1.0, 0.0));
        let bad = vec![vec![1.0, 0.0, 0.0, 0.0]];
        assert!(matches!(recipe_minimal(&h, &bad, &plan, &mut |_| {}), Err(Error::IncompatibleTargets(_))));
        let wrong_h = vec![vec![0.0, 0.0, 1.0, 0.0]];
        assert!(matches!(recipe_minimal(&h, &wrong_h, &plan, &mut |_| {}), Err(Error::IncompatibleTargets(_))));
    }

    #[test]
    fn harmonic_case_a_on_annulus() {
        let d = CircularDomain::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap();
        let plan = ExhaustionPlan::concentric(&d, 1, 0.1, c(1.0, 0.0)).unwrap();
        let h = PrescribedMap::coordinate_plane(c(1.0, 0.0));
        let p = vec![vec![1.0, 1.0, 0.0, 0.0]];
        let out = recipe_harmonic(&h, &HoloForm::dz(), &p, &plan, None, &mut |_| {}).unwrap();
        assert_eq!(out.case, PairCase::CaseA);
        assert!(out.audit.hopf_residual <= 1e-9, "{:?}", out.audit);
        assert!(out.audit.flux_residual <= 1e-8, "{:?}", out.audit);
    }

    #[test]
    fn cm_pair_is_identity() {
        let plan = disc_plan(3);
        let out = recipe_cm_embedding(&plan, &mut |_| {}).unwrap();
        assert_eq!(out.tuple.forms[2], HoloForm::dz());
        assert_eq!(out.tuple.forms[3], HoloForm::dz().scale(-I));
        let log = &out.exhaustion.as_ref().unwrap().log;
        assert!(log.iter().all(|s| s.distance_ok()));
        assert!(out.notes.iter().any(|n| n.contains("not numerically certified")));
    }

    #[test]
    fn gauss_omit_is_conformal() {
        for n in [3, 4, 5] {
            let plan = disc_plan(1);
            let out = recipe_gauss_omit(n, &[], &plan, None).unwrap();
            assert_eq!(out.tuple.dimension(), n);
            assert!(out.audit.conformality_residual.unwrap() <= CONFORMALITY_TOL, "n={n} {:?}", out.audit);
        }
        assert_eq!(omitted_hyperplanes(5).len(), 5);
    }
}
