//! Exponential period correction: find `α` so that the pair built from
//! `e^{Σα_i f_i}` times a seed has prescribed periods on every cycle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{CircularDomain, Cycle};
use crate::holo::{laurent_fit, FitOptions, FitReport, HoloForm, HoloFunction, PERIOD_REL_TOL};
use crate::weierstrass::{certify_nonvanishing, eta_of, eta_split_unchecked};
use crate::{Error, Result, C, I};

/// Smallest admissible `σ_min/σ_max` of the selected Fréchet block.
pub const SURJECTIVITY_RATIO: f64 = 1e-8;
/// Multiplicative perturbation `e^{εz}` applied to degenerate seeds.
pub const PERTURBATION_EPS: f64 = 1e-3;
pub const MAX_PERTURBATIONS: usize = 3;
const MAX_EXTRA_LEVELS: usize = 5;

#[derive(Debug, Clone)]
pub enum Mode {
    /// `ψ = η-split(e^f η_seed, Θ)`.
    CaseA { theta: HoloForm, eta_seed: HoloForm },
    /// `ψ₁ = e^f φ₁`, `ψ₂ = βψ₁`, `β = ±i`.
    CaseB { phi1_seed: HoloForm, beta: C },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub period_tol: f64,
    /// Smallest damping factor tried before the step is declared to underflow.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Starting value for every coefficient of `α`.
    pub initial_alpha: C,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { period_tol: 1e-10, newton_tol: 1e-9, max_iter: 50, initial_alpha: C::new(0.0, 0.0) }
    }
}

#[derive(Debug, Clone)]
pub struct CorrectorProblem {
    pub domain: CircularDomain,
    pub cycles: Vec<Cycle>,
    pub mode: Mode,
    /// Targets for `(∮ψ₁, ∮ψ₂)` per cycle.
    pub targets: Vec<[C; 2]>,
    pub basis_candidates: Vec<HoloFunction>,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonStep {
    pub residual: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct CorrectorSolution {
    pub alpha: Vec<C>,
    pub basis: Vec<HoloFunction>,
    pub f: HoloFunction,
    pub psi1: HoloForm,
    pub psi2: HoloForm,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<NewtonStep>,
    pub condition: f64,
    pub perturbations: usize,
}

/// Scaled candidate pool: `((z−c₀)/R)^k` for `0 ≤ k ≤ ν+2` and
/// `(r_h/(z−c_h))^k` for `1 ≤ k ≤ ν+2`.
pub fn default_pool(domain: &CircularDomain) -> Vec<HoloFunction> {
    let kmax = domain.nu() + 2;
    let mut pool: Vec<HoloFunction> = (0..=kmax)
        .map(|k| HoloFunction::power(domain.outer_center, k).scale(C::new(domain.outer_radius.powi(-(k as i32)), 0.0)))
        .collect();
    for h in &domain.holes {
        for k in 1..=kmax {
            pool.push(HoloFunction::inverse_power(h.center, k).scale(C::new(h.radius.powi(k as i32), 0.0)));
        }
    }
    pool
}

impl CorrectorProblem {
    pub fn new(domain: CircularDomain, cycles: Vec<Cycle>, mode: Mode, targets: Vec<[C; 2]>) -> Result<Self> {
        let basis_candidates = default_pool(&domain);
        let p = CorrectorProblem { domain, cycles, mode, targets, basis_candidates, tol: Tolerances::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_candidates(mut self, pool: Vec<HoloFunction>) -> Self {
        self.basis_candidates = pool;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.cycles.len() {
            return Err(Error::IncompatibleTargets(format!(
                "{} targets for {} cycles",
                self.targets.len(),
                self.cycles.len()
            )));
        }
        if let Mode::CaseB { beta, .. } = &self.mode {
            if (beta - I).norm() > 1e-15 && (beta + I).norm() > 1e-15 {
                return Err(Error::IncompatibleTargets(format!("beta must be ±i, got {beta}")));
            }
            for (k, [f1, f2]) in self.targets.iter().enumerate() {
                if (f2 - beta * f1).norm() > 1e-12 * (1.0 + f1.norm()) {
                    return Err(Error::IncompatibleTargets(format!("cycle {k}: second target is not beta times the first")));
                }
            }
        }
        if !(self.tol.period_tol > 0.0 && self.tol.newton_tol > 0.0) {
            return Err(Error::Config("corrector tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn nu(&self) -> usize {
        self.cycles.len()
    }

    /// Number of unknowns: `2ν` in case A, `ν` in case B.
    pub fn unknowns(&self) -> usize {
        match self.mode {
            Mode::CaseA { .. } => 2 * self.nu(),
            Mode::CaseB { .. } => self.nu(),
        }
    }

    fn perturbed(&self, times: usize) -> Mode {
        if times == 0 {
            return self.mode.clone();
        }
        let bump = HoloFunction::z().scale(C::new(PERTURBATION_EPS * times as f64, 0.0));
        match &self.mode {
            Mode::CaseA { theta, eta_seed } => Mode::CaseA { theta: theta.clone(), eta_seed: eta_seed.exp_scale(&bump) },
            Mode::CaseB { phi1_seed, beta } => Mode::CaseB { phi1_seed: phi1_seed.exp_scale(&bump), beta: *beta },
        }
    }
}

/// Seed data and basis values at the trapezoid nodes of one cycle.
struct Level {
    weights: Vec<C>,
    /// `θ` (case A) or `φ₁` (case B).
    seed: Vec<C>,
    /// `Θ/dz²`, zero in case B.
    theta: Vec<C>,
    /// `basis[i][k]`.
    basis: Vec<Vec<C>>,
}

impl Level {
    fn build(mode: &Mode, basis: &[HoloFunction], cycle: &Cycle, n: usize) -> Result<Level> {
        let (nodes, weights) = cycle.nodes_and_weights(n);
        let (seed, theta) = match mode {
            Mode::CaseA { theta, eta_seed } => (eta_seed.eval_many(&nodes)?, theta.eval_many(&nodes)?),
            Mode::CaseB { phi1_seed, .. } => (phi1_seed.eval_many(&nodes)?, vec![C::new(0.0, 0.0); n]),
        };
        let basis = basis.iter().map(|b| b.eval_many(&nodes)).collect::<Result<Vec<_>>>()?;
        Ok(Level { weights, seed, theta, basis })
    }
}

/// Residual vector, Jacobian and per-row integrand mass at one quadrature level.
struct System {
    g: Vec<C>,
    j: DMatrix<C>,
    mass: Vec<f64>,
}

fn residual_norm(mode: &Mode, g: &[C]) -> f64 {
    // Report in terms of the pair: case A rows carry 2∮ψ₁ and −2i∮ψ₂,
    // case B rows carry ∮ψ₁ with ∮ψ₂ = β∮ψ₁.
    match mode {
        Mode::CaseA { .. } => g.chunks(2).map(|r| 0.5 * (r[0].norm_sqr() + r[1].norm_sqr()).sqrt()).fold(0.0, f64::max),
        Mode::CaseB { .. } => g.iter().map(|r| std::f64::consts::SQRT_2 * r.norm()).fold(0.0, f64::max),
    }
}

struct Evaluator<'a> {
    problem: &'a CorrectorProblem,
    mode: Mode,
    basis: Vec<HoloFunction>,
    /// `levels[c][l]` has `quadrature_points · 2^l` nodes.
    levels: Vec<Vec<Level>>,
    active: usize,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a CorrectorProblem, mode: Mode, basis: Vec<HoloFunction>) -> Result<Self> {
        let levels = problem
            .cycles
            .par_iter()
            .map(|c| {
                Ok(vec![
                    Level::build(&mode, &basis, c, c.quadrature_points)?,
                    Level::build(&mode, &basis, c, 2 * c.quadrature_points)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluator { problem, mode, basis, levels, active: 0 })
    }

    fn refine(&mut self) -> Result<()> {
        let next = self.active + 2;
        let mode = &self.mode;
        let basis = &self.basis;
        let added = self
            .problem
            .cycles
            .par_iter()
            .map(|c| Level::build(mode, basis, c, c.quadrature_points << next))
            .collect::<Result<Vec<_>>>()?;
        for (ls, l) in self.levels.iter_mut().zip(added) {
            ls.push(l);
        }
        self.active += 1;
        Ok(())
    }

    fn at_level(&self, alpha: &[C], level: usize) -> Result<System> {
        let case_a = matches!(self.mode, Mode::CaseA { .. });
        let rows = if case_a { 2 * self.levels.len() } else { self.levels.len() };
        let nb = self.basis.len();
        let mut g = vec![C::new(0.0, 0.0); rows];
        let mut mass = vec![0.0; rows];
        let mut j = DMatrix::<C>::zeros(rows, nb);
        for (c, ls) in self.levels.iter().enumerate() {
            let lv = &ls[level];
            let [f1, f2] = self.problem.targets[c];
            let mut s_plus = C::new(0.0, 0.0);
            let mut s_minus = C::new(0.0, 0.0);
            let mut m_plus = 0.0;
            let mut m_minus = 0.0;
            let mut j_plus = vec![C::new(0.0, 0.0); nb];
            let mut j_minus = vec![C::new(0.0, 0.0); nb];
            for k in 0..lv.weights.len() {
                let mut f = C::new(0.0, 0.0);
                for (i, a) in alpha.iter().enumerate() {
                    f += a * lv.basis[i][k];
                }
                let eta = f.exp() * lv.seed[k];
                let q = if case_a { lv.theta[k] / eta } else { C::new(0.0, 0.0) };
                if !(eta.re.is_finite() && eta.im.is_finite() && q.re.is_finite() && q.im.is_finite()) {
                    return Err(Error::EvalOutsideDomain { re: f.re, im: f.im });
                }
                let w = lv.weights[k];
                let (p, m) = ((eta + q) * w, (eta - q) * w);
                s_plus += p;
                s_minus += m;
                m_plus += p.norm();
                m_minus += m.norm();
                for i in 0..nb {
                    j_plus[i] += lv.basis[i][k] * p;
                    j_minus[i] += lv.basis[i][k] * m;
                }
            }
            if case_a {
                g[2 * c] = s_plus - 2.0 * f1;
                g[2 * c + 1] = s_minus + 2.0 * I * f2;
                mass[2 * c] = m_plus;
                mass[2 * c + 1] = m_minus;
                for i in 0..nb {
                    j[(2 * c, i)] = j_minus[i];
                    j[(2 * c + 1, i)] = j_plus[i];
                }
            } else {
                g[c] = s_plus - f1;
                mass[c] = m_plus;
                for i in 0..nb {
                    j[(c, i)] = j_plus[i];
                }
            }
        }
        Ok(System { g, j, mass })
    }

    /// System at the active level, refined until it agrees with the next one.
    fn eval(&mut self, alpha: &[C]) -> Result<System> {
        loop {
            let coarse = self.at_level(alpha, self.active)?;
            let fine = self.at_level(alpha, self.active + 1)?;
            let mut worst: f64 = 0.0;
            for r in 0..fine.g.len() {
                let scale = fine.mass[r].max(fine.g[r].norm()).max(f64::MIN_POSITIVE);
                worst = worst.max((fine.g[r] - coarse.g[r]).norm() / scale);
            }
            if worst <= PERIOD_REL_TOL {
                return Ok(fine);
            }
            if self.active >= MAX_EXTRA_LEVELS {
                return Err(Error::QuadratureDivergence {
                    coarse: format!("{:?}", coarse.g),
                    fine: format!("{:?}", fine.g),
                    rel: worst,
                });
            }
            self.refine()?;
        }
    }
}

/// Fréchet derivative of the period map at `α = 0` over the given basis.
pub fn frechet_matrix(problem: &CorrectorProblem, basis: &[HoloFunction]) -> Result<DMatrix<C>> {
    let mut ev = Evaluator::new(problem, problem.mode.clone(), basis.to_vec())?;
    Ok(ev.eval(&vec![C::new(0.0, 0.0); basis.len()])?.j)
}

/// Residual vector `G(α)` and analytic Jacobian for a fixed basis.
pub fn period_system(problem: &CorrectorProblem, basis: &[HoloFunction], alpha: &[C]) -> Result<(Vec<C>, DMatrix<C>)> {
    let mut ev = Evaluator::new(problem, problem.mode.clone(), basis.to_vec())?;
    let s = ev.eval(alpha)?;
    Ok((s.g, s.j))
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub basis: Vec<HoloFunction>,
    /// `σ_max/σ_min` of the selected, column-normalized block.
    pub condition: f64,
}

fn select_from(problem: &CorrectorProblem, mode: &Mode) -> Result<Selection> {
    let k = match mode {
        Mode::CaseA { .. } => 2 * problem.nu(),
        Mode::CaseB { .. } => problem.nu(),
    };
    if k == 0 {
        return Ok(Selection { indices: Vec::new(), basis: Vec::new(), condition: 1.0 });
    }
    let pool = &problem.basis_candidates;
    let mut ev = Evaluator::new(problem, mode.clone(), pool.clone())?;
    let m = ev.eval(&vec![C::new(0.0, 0.0); pool.len()])?.j;
    let norms: Vec<f64> = (0..pool.len()).map(|i| m.column(i).norm()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let mut cols: Vec<Option<DVector<C>>> = (0..pool.len())
        .map(|i| (norms[i] > 1e-12 * top && norms[i] > 0.0).then(|| m.column(i) / C::new(norms[i], 0.0)))
        .collect();
    let normalized: Vec<Option<DVector<C>>> = cols.clone();
    let mut chosen = Vec::new();
    for _ in 0..k {
        let best = cols
            .iter()
            .enumerate()
            .filter(|(i, c)| c.is_some() && !chosen.contains(i))
            .map(|(i, c)| (i, c.as_ref().unwrap().norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((p, _)) = best else { break };
        let q = cols[p].take().unwrap();
        let q = &q / C::new(q.norm().max(f64::MIN_POSITIVE), 0.0);
        for c in cols.iter_mut().flatten() {
            let proj = (q.adjoint() * &*c)[0];
            *c -= &q * proj;
        }
        chosen.push(p);
    }
    if chosen.len() < k {
        return Err(Error::SurjectivityFailure { ratio: 0.0 });
    }
    chosen.sort_unstable();
    let block = DMatrix::from_columns(&chosen.iter().map(|&i| normalized[i].clone().unwrap()).collect::<Vec<_>>());
    let sv = block.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(ratio >= SURJECTIVITY_RATIO) {
        return Err(Error::SurjectivityFailure { ratio });
    }
    Ok(Selection { basis: chosen.iter().map(|&i| pool[i].clone()).collect(), indices: chosen, condition: 1.0 / ratio })
}

/// Greedy column-pivoted selection of `2ν` (case A) or `ν` (case B) pool
/// functions whose Fréchet block is best conditioned.
pub fn select_basis(problem: &CorrectorProblem) -> Result<Selection> {
    select_from(problem, &problem.mode)
}

fn assemble(mode: &Mode, f: &HoloFunction) -> (HoloForm, HoloForm) {
    match mode {
        Mode::CaseA { theta, eta_seed } => eta_split_unchecked(&eta_seed.exp_scale(f), theta),
        Mode::CaseB { phi1_seed, beta } => {
            let psi1 = phi1_seed.exp_scale(f);
            let psi2 = psi1.scale(*beta);
            (psi1, psi2)
        }
    }
}

fn combination(alpha: &[C], basis: &[HoloFunction]) -> HoloFunction {
    alpha.iter().zip(basis).fold(HoloFunction::zero(), |acc, (a, b)| acc + b.scale(*a))
}

fn check_seed(problem: &CorrectorProblem) -> Result<()> {
    match &problem.mode {
        Mode::CaseA { eta_seed, .. } => certify_nonvanishing(eta_seed, &problem.domain),
        Mode::CaseB { phi1_seed, .. } => {
            let vals = phi1_seed.eval_many(&problem.domain.boundary_samples(64))?;
            if vals.iter().all(|v| v.norm() == 0.0) {
                Err(Error::IncompatibleTargets("case B seed vanishes identically".into()))
            } else {
                Ok(())
            }
        }
    }
}

fn newton(problem: &CorrectorProblem, mode: Mode, sel: Selection, perturbations: usize) -> Result<CorrectorSolution> {
    let tol = problem.tol;
    let mut ev = Evaluator::new(problem, mode.clone(), sel.basis.clone())?;
    let mut alpha = vec![tol.initial_alpha; sel.basis.len()];
    let mut sys = ev.eval(&alpha)?;
    let mut r = residual_norm(&mode, &sys.g);
    let mut trace = vec![NewtonStep { residual: r, damping: 0.0 }];
    let mut iterations = 0;
    while !(r <= tol.period_tol) {
        let residuals = || trace.iter().map(|s: &NewtonStep| s.residual).collect::<Vec<_>>();
        if iterations >= tol.max_iter || !r.is_finite() {
            return Err(Error::NewtonDiverged { trace: residuals() });
        }
        let g = DVector::from_column_slice(&sys.g);
        let step = if sys.j.is_square() {
            sys.j.clone().lu().solve(&g)
        } else {
            // Minimum-norm step for the overcomplete fallback basis.
            sys.j.clone().svd(true, true).solve(&g, 1e-12 * sys.j.norm()).ok()
        };
        let Some(step) = step else {
            return Err(Error::NewtonDiverged { trace: residuals() });
        };
        let mut t = 1.0;
        loop {
            let trial: Vec<C> = alpha.iter().zip(step.iter()).map(|(a, s)| a - s * t).collect();
            match ev.eval(&trial) {
                Ok(next) => {
                    let r2 = residual_norm(&mode, &next.g);
                    if r2 < r {
                        alpha = trial;
                        sys = next;
                        r = r2;
                        break;
                    }
                }
                Err(Error::QuadratureDivergence { .. }) | Err(Error::EvalOutsideDomain { .. }) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
            if t < tol.newton_tol {
                return Err(Error::NewtonDiverged { trace: residuals() });
            }
        }
        iterations += 1;
        trace.push(NewtonStep { residual: r, damping: t });
    }
    let f = combination(&alpha, &sel.basis);
    let (psi1, psi2) = assemble(&mode, &f);
    if let Mode::CaseA { eta_seed, .. } = &mode {
        certify_nonvanishing(&eta_seed.exp_scale(&f), &problem.domain)?;
    }
    Ok(CorrectorSolution {
        alpha,
        basis: sel.basis,
        f,
        psi1,
        psi2,
        residual: r,
        iterations,
        trace,
        condition: sel.condition,
        perturbations,
    })
}

/// Damped Newton solve of the period equations from `α = initial_alpha`,
/// perturbing a degenerate seed by `e^{εz}` up to three times.
pub fn solve(problem: &CorrectorProblem) -> Result<CorrectorSolution> {
    problem.validate()?;
    check_seed(problem)?;
    let mut last = None;
    for attempt in 0..=MAX_PERTURBATIONS {
        let mode = problem.perturbed(attempt);
        match select_from(problem, &mode) {
            Ok(sel) => {
                return match newton(problem, mode.clone(), sel.clone(), attempt) {
                    Err(Error::NewtonDiverged { trace }) if problem.basis_candidates.len() > sel.basis.len() => {
                        let full = Selection {
                            indices: (0..problem.basis_candidates.len()).collect(),
                            basis: problem.basis_candidates.clone(),
                            condition: sel.condition,
                        };
                        newton(problem, mode, full, attempt).map_err(|e| match e {
                            Error::NewtonDiverged { trace: more } => {
                                Error::NewtonDiverged { trace: trace.into_iter().chain(more).collect() }
                            }
                            e => e,
                        })
                    }
                    other => other,
                };
            }
            Err(e @ Error::SurjectivityFailure { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Inputs for fitting a target pair sampled on a set and restoring its
/// quadratic relation and periods.
#[derive(Debug, Clone)]
pub struct ApproxRequest {
    pub samples: Vec<(C, [C; 2])>,
    pub weights: Option<Vec<f64>>,
    pub domain: CircularDomain,
    pub cycles: Vec<Cycle>,
    pub targets: Vec<[C; 2]>,
    /// `Θ/dz²`; `None` selects the β-locked route.
    pub theta: Option<HoloForm>,
    pub beta: C,
    pub degrees: (usize, usize),
    pub tol: Tolerances,
}

#[derive(Debug, Clone)]
pub struct ApproxOutcome {
    pub psi1: HoloForm,
    pub psi2: HoloForm,
    pub fit: FitReport,
    pub solution: CorrectorSolution,
}

/// Period-constrained Laurent fit of the target followed by a corrector
/// solve, so the result satisfies `ψ₁²+ψ₂² = Θ` and the period targets.
pub fn zero_preserving_approx(req: &ApproxRequest) -> Result<ApproxOutcome> {
    let opts = FitOptions { weights: req.weights.clone(), tol: None };
    let (seed_targets, constraints): (Vec<(C, C)>, Vec<(Cycle, C)>) = match &req.theta {
        Some(_) => (
            req.samples.iter().map(|(z, [a, b])| (*z, a - I * b)).collect(),
            req.cycles.iter().zip(&req.targets).map(|(c, [f1, f2])| (*c, f1 - I * f2)).collect(),
        ),
        None => (
            req.samples.iter().map(|(z, [a, _])| (*z, *a)).collect(),
            req.cycles.iter().zip(&req.targets).map(|(c, [f1, _])| (*c, *f1)).collect(),
        ),
    };
    let (seed, fit) = laurent_fit(&seed_targets, &req.domain, req.degrees, &constraints, &opts)?;
    let mode = match &req.theta {
        Some(theta) => Mode::CaseA { theta: theta.clone(), eta_seed: seed },
        None => Mode::CaseB { phi1_seed: seed, beta: req.beta },
    };
    let problem = CorrectorProblem::new(req.domain.clone(), req.cycles.clone(), mode, req.targets.clone())?.with_tolerances(req.tol);
    let solution = solve(&problem)?;
    Ok(ApproxOutcome { psi1: solution.psi1.clone(), psi2: solution.psi2.clone(), fit, solution })
}

/// `η` of a pair, for callers that hold `(ψ₁, ψ₂)` rather than the seed.
pub fn pair_eta(psi1: &HoloForm, psi2: &HoloForm) -> HoloForm {
    eta_of(psi1, psi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::homology_basis;
    use crate::holo::{period, trapezoid, Laurent, PoleSeries};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn annulus() -> CircularDomain {
        CircularDomain::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap()
    }

    fn inv_z() -> HoloFunction {
        HoloFunction::inverse_power(c(0.0, 0.0), 1)
    }

    fn case_b(targets: Vec<[C; 2]>) -> CorrectorProblem {
        let d = annulus();
        let cycles = homology_basis(&d);
        CorrectorProblem::new(d, cycles, Mode::CaseB { phi1_seed: HoloForm::dz(), beta: I }, targets).unwrap()
    }

    fn seed_a() -> HoloForm {
        HoloForm::laurent(Laurent {
            center: c(0.0, 0.0),
            poly: vec![c(1.0, 0.0)],
            poles: vec![PoleSeries { center: c(0.0, 0.0), coeffs: vec![c(0.3, 0.0)] }],
        })
    }

    fn case_a(theta: HoloForm, eta: HoloForm, shift: f64) -> CorrectorProblem {
        let d = annulus();
        let cycles = homology_basis(&d);
        let (p1, p2) = eta_split_unchecked(&eta, &theta);
        let t: Vec<[C; 2]> = cycles
            .iter()
            .map(|cy| {
                let (a, b) = (period(&p1, cy).unwrap(), period(&p2, cy).unwrap());
                [a + shift * a.norm(), b + c(0.0, shift * b.norm())]
            })
            .collect();
        CorrectorProblem::new(d, cycles, Mode::CaseA { theta, eta_seed: eta }, t).unwrap()
    }

    #[test]
    fn frechet_examples() {
        let p = case_b(vec![[c(0.0, 0.0); 2]]);
        let m = frechet_matrix(&p, &[inv_z(), HoloFunction::z()]).unwrap();
        assert!((m[(0, 0)] - 2.0 * PI * I).norm() < 1e-13);
        assert!(m[(0, 1)].norm() < 1e-13);
        let d = annulus();
        let cycles = homology_basis(&d);
        let p = CorrectorProblem::new(
            d,
            cycles,
            Mode::CaseA { theta: HoloForm::zero(), eta_seed: HoloForm::dz() },
            vec![[c(0.0, 0.0); 2]],
        )
        .unwrap();
        let m = frechet_matrix(&p, &[inv_z()]).unwrap();
        assert!((m[(0, 0)] - 2.0 * PI * I).norm() < 1e-13 && (m[(1, 0)] - 2.0 * PI * I).norm() < 1e-13);
    }

    #[test]
    fn case_b_selects_the_residue_carrier() {
        let pool = vec![
            HoloFunction::constant(c(1.0, 0.0)),
            HoloFunction::z(),
            inv_z(),
            HoloFunction::inverse_power(c(0.0, 0.0), 2),
        ];
        let p = case_b(vec![[c(0.0, 0.0); 2]]).with_candidates(pool);
        assert_eq!(select_basis(&p).unwrap().indices, vec![2]);
    }

    #[test]
    fn case_a_without_hopf_target_is_degenerate() {
        let d = annulus();
        let cycles = homology_basis(&d);
        let p = CorrectorProblem::new(
            d,
            cycles,
            Mode::CaseA { theta: HoloForm::zero(), eta_seed: HoloForm::dz() },
            vec![[c(0.0, 0.0); 2]],
        )
        .unwrap();
        // Θ = 0 makes the two rows of each cycle coincide: the rank is ν, not 2ν.
        assert!(matches!(select_basis(&p), Err(Error::SurjectivityFailure { .. })));
        assert!(matches!(solve(&p), Err(Error::SurjectivityFailure { .. })));
    }

    #[test]
    fn disc_returns_seed() {
        let d = CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap();
        let p = CorrectorProblem::new(d, vec![], Mode::CaseB { phi1_seed: HoloForm::dz(), beta: -I }, vec![]).unwrap();
        let s = solve(&p).unwrap();
        assert!(s.alpha.is_empty() && s.iterations == 0);
        assert_eq!(s.psi1.eval(c(0.2, 0.3)).unwrap(), c(1.0, 0.0));
        assert_eq!(s.psi2.eval(c(0.2, 0.3)).unwrap(), -I);
    }

    #[test]
    fn case_b_is_linear_in_alpha() {
        for t in [c(0.3, 0.0), c(-1.7, 0.0), c(2.0, 1.0)] {
            let f1 = 2.0 * PI * I * t;
            let p = case_b(vec![[f1, I * f1]]).with_candidates(vec![inv_z()]);
            let s = solve(&p).unwrap();
            assert!((s.alpha[0] - t).norm() < 1e-12, "{t}: {:?}", s.alpha);
            assert!(s.iterations <= 2);
            assert_eq!(s.trace[1].damping, 1.0);
        }
    }

    #[test]
    fn own_periods_are_a_fixed_point() {
        let p = case_a(HoloForm::constant(c(1.0, 0.0)), seed_a(), 0.0);
        let s = solve(&p).unwrap();
        assert!(s.iterations == 0 && s.alpha.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn case_a_converges_from_shifted_targets() {
        let p = case_a(HoloForm::constant(c(1.0, 0.0)), seed_a(), 0.1);
        let s = solve(&p).unwrap();
        assert!(s.residual <= 1e-10);
        for (cy, [f1, f2]) in p.cycles.iter().zip(&p.targets) {
            let n = 4 * cy.quadrature_points;
            let (a, b) = (trapezoid(&s.psi1, cy, n).unwrap(), trapezoid(&s.psi2, cy, n).unwrap());
            assert!((a - f1).norm() < 1e-10 && (b - f2).norm() < 1e-10);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let z = C::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
            let (a, b) = (s.psi1.eval(z).unwrap(), s.psi2.eval(z).unwrap());
            assert!((a * a + b * b - 1.0).norm() <= 2e-11);
        }
    }

    #[test]
    fn degenerate_seed_is_perturbed() {
        let d = annulus();
        let cycles = homology_basis(&d);
        let mode = Mode::CaseA { theta: HoloForm::constant(c(1.0, 0.0)), eta_seed: HoloForm::dz() };
        let p = CorrectorProblem::new(d, cycles, mode, vec![[c(0.0, 0.0); 2]]).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.perturbations, 1);
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let p = case_a(HoloForm::constant(c(1.0, 0.0)), seed_a(), 0.1);
        let basis = select_basis(&p).unwrap().basis;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..5 {
            let alpha: Vec<C> = (0..basis.len()).map(|_| c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2))).collect();
            let (_, j) = period_system(&p, &basis, &alpha).unwrap();
            for i in 0..basis.len() {
                let mut up = alpha.clone();
                let mut dn = alpha.clone();
                up[i] += h;
                dn[i] -= h;
                let (gu, _) = period_system(&p, &basis, &up).unwrap();
                let (gd, _) = period_system(&p, &basis, &dn).unwrap();
                for r in 0..gu.len() {
                    let fd = (gu[r] - gd[r]) / (2.0 * h);
                    assert!((fd - j[(r, i)]).norm() <= 1e-5 * j[(r, i)].norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn approximation_fixed_point() {
        let d = annulus();
        let cycles = homology_basis(&d);
        let eta = HoloForm::dz_over(c(0.0, 0.0)).scale(c(2.0, 0.0));
        let theta = HoloForm::constant(c(1.0, 0.0));
        let (p1, p2) = eta_split_unchecked(&eta, &theta);
        let mut pts = d.boundary_samples(64);
        pts.extend((0..64).map(|k| C::from_polar(1.2, 0.1 * k as f64)));
        let samples: Vec<(C, [C; 2])> = pts.iter().map(|&z| (z, [p1.eval(z).unwrap(), p2.eval(z).unwrap()])).collect();
        let targets: Vec<[C; 2]> = cycles.iter().map(|cy| [period(&p1, cy).unwrap(), period(&p2, cy).unwrap()]).collect();
        let req = ApproxRequest {
            samples: samples.clone(),
            weights: None,
            domain: d.clone(),
            cycles: cycles.clone(),
            targets,
            theta: Some(theta),
            beta: I,
            degrees: (3, 3),
            tol: Tolerances::default(),
        };
        let out = zero_preserving_approx(&req).unwrap();
        for (z, [a, b]) in &samples {
            assert!((out.psi1.eval(*z).unwrap() - a).norm() < 1e-10);
            assert!((out.psi2.eval(*z).unwrap() - b).norm() < 1e-10);
        }
        let req_b = ApproxRequest {
            samples: pts.iter().map(|&z| (z, [c(1.0, 0.0), I])).collect(),
            targets: vec![[c(0.0, 0.0); 2]],
            theta: None,
            ..req
        };
        let out = zero_preserving_approx(&req_b).unwrap();
        let z = c(0.9, 0.4);
        assert_eq!(out.psi2.eval(z).unwrap(), I * out.psi1.eval(z).unwrap());
    }
}
