//! Weierstrass data and its first invariants: Hopf differential, metric
//! density, flux, and the η-split of a pair of forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CircularDomain, Cycle};
use crate::holo::{period, HoloForm};
use crate::{Error, Result, C, I};

/// Relative floor for the minimum modulus of a certified-nonvanishing form.
pub const NONVANISHING_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeierstrassTuple {
    pub forms: Vec<HoloForm>,
    pub base_point: C,
    /// `Θ/dz²`.
    pub hopf_target: HoloForm,
    pub domain: CircularDomain,
}

impl WeierstrassTuple {
    pub fn new(forms: Vec<HoloForm>, base_point: C, hopf_target: HoloForm, domain: CircularDomain) -> Result<Self> {
        if forms.len() < 3 {
            return Err(Error::Config(format!("target dimension must be at least 3, got {}", forms.len())));
        }
        if !domain.contains(base_point) {
            return Err(Error::EvalOutsideDomain { re: base_point.re, im: base_point.im });
        }
        let w = WeierstrassTuple { forms, base_point, hopf_target, domain };
        let probe = w.domain.boundary_samples(16);
        for f in w.forms.iter().chain(std::iter::once(&w.hopf_target)) {
            f.check_depth()?;
            f.eval_many(&probe)?;
        }
        Ok(w)
    }

    pub fn dimension(&self) -> usize {
        self.forms.len()
    }
}

/// Flux and complex period targets, one entry per homology cycle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodTargets {
    pub flux: Vec<Vec<f64>>,
    /// Targets for `∮ψ₁, ∮ψ₂`.
    pub f: Vec<[C; 2]>,
    #[serde(default)]
    pub case_b_beta: Option<C>,
}

impl PeriodTargets {
    pub fn validate(&self, nu: usize, n: usize) -> Result<()> {
        if self.flux.len() != nu || self.f.len() != nu {
            return Err(Error::IncompatibleTargets(format!(
                "{} flux and {} complex targets for {nu} cycles",
                self.flux.len(),
                self.f.len()
            )));
        }
        if let Some(v) = self.flux.iter().find(|v| v.len() != n) {
            return Err(Error::IncompatibleTargets(format!("flux vector of length {} in dimension {n}", v.len())));
        }
        if let Some(beta) = self.case_b_beta {
            if (beta - I).norm() > 1e-15 && (beta + I).norm() > 1e-15 {
                return Err(Error::IncompatibleTargets(format!("beta must be ±i, got {beta}")));
            }
            for (k, [f1, f2]) in self.f.iter().enumerate() {
                if (f2 - beta * f1).norm() > 1e-12 * (1.0 + f1.norm()) {
                    return Err(Error::IncompatibleTargets(format!("cycle {k}: f2 != beta f1")));
                }
            }
        }
        Ok(())
    }
}

/// `Σ_j (ψ_j/dz)²` at each point.
pub fn hopf_differential(w: &WeierstrassTuple, points: &[C]) -> Result<Vec<C>> {
    points
        .par_iter()
        .map(|&z| {
            let mut q = C::new(0.0, 0.0);
            for f in &w.forms {
                let v = f.eval(z)?;
                q += v * v;
            }
            Ok(q)
        })
        .collect()
}

/// `σ² = Σ_j |ψ_j/dz|² + 𝓘` at each point.
pub fn metric_density(
    w: &WeierstrassTuple,
    aux: Option<&(dyn Fn(C) -> f64 + Sync)>,
    points: &[C],
) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|&z| {
            let mut s = aux.map_or(0.0, |a| a(z));
            for f in &w.forms {
                s += f.eval(z)?.norm_sqr();
            }
            Ok(s)
        })
        .collect()
}

/// `(Im ∮ψ_j)_j` per cycle.
pub fn flux(w: &WeierstrassTuple, cycles: &[Cycle]) -> Result<Vec<Vec<f64>>> {
    cycles
        .iter()
        .map(|c| w.forms.iter().map(|f| period(f, c).map(|p| p.im)).collect())
        .collect()
}

/// Points used to certify that a form has no zeros: boundary circles plus a
/// square lattice over the domain.
pub fn certification_samples(domain: &CircularDomain) -> Vec<C> {
    let r = domain.outer_radius;
    let h = (r / 40.0).min(domain.min_gap() / 4.5).max(2.0 * r / 450.0);
    let k = (r / h).ceil() as i64;
    let mut pts = domain.boundary_samples(256);
    for i in -k..=k {
        for j in -k..=k {
            let z = domain.outer_center + C::new(i as f64 * h, j as f64 * h);
            if domain.contains(z) {
                pts.push(z);
            }
        }
    }
    pts
}

/// Certifies `|form| ≥ margin · median|form|` on the certification samples.
pub fn certify_nonvanishing(form: &HoloForm, domain: &CircularDomain) -> Result<()> {
    let pts = certification_samples(domain);
    let vals = form.eval_many(&pts)?;
    let mut mods: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let (imin, &min) = mods.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("samples nonempty");
    let at = pts[imin];
    mods.sort_by(f64::total_cmp);
    let median = mods[mods.len() / 2];
    if !(min >= NONVANISHING_MARGIN * median) || median == 0.0 {
        return Err(Error::EtaVanishes { min_modulus: min, re: at.re, im: at.im });
    }
    Ok(())
}

/// `φ₁ = ½(η + Θ/η)`, `φ₂ = (i/2)(η − Θ/η)` with `η` certified nonvanishing.
pub fn eta_split(eta: &HoloForm, theta: &HoloForm, domain: &CircularDomain) -> Result<(HoloForm, HoloForm)> {
    certify_nonvanishing(eta, domain)?;
    Ok(eta_split_unchecked(eta, theta))
}

pub fn eta_split_unchecked(eta: &HoloForm, theta: &HoloForm) -> (HoloForm, HoloForm) {
    let q = theta.quotient(eta);
    let phi1 = (eta + &q).scale(C::new(0.5, 0.0));
    let phi2 = (eta - &q).scale(I * 0.5);
    (phi1, phi2)
}

/// `η = φ₁ − iφ₂`.
pub fn eta_of(phi1: &HoloForm, phi2: &HoloForm) -> HoloForm {
    phi1 - &phi2.scale(I)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{homology_basis, DEFAULT_QUADRATURE_POINTS};
    use crate::holo::{Laurent, PoleSeries};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn disc() -> CircularDomain {
        CircularDomain::disc(c(0.0, 0.0), 1.0).unwrap()
    }

    fn annulus() -> CircularDomain {
        CircularDomain::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap()
    }

    fn tuple(forms: Vec<HoloForm>, theta: HoloForm, d: CircularDomain) -> WeierstrassTuple {
        let p = if d.holes.is_empty() { c(0.0, 0.0) } else { c(1.0, 0.0) };
        WeierstrassTuple::new(forms, p, theta, d).unwrap()
    }

    fn pts() -> Vec<C> {
        (0..50).map(|k| C::from_polar(0.6 + 0.01 * k as f64, 0.4 * k as f64)).collect()
    }

    #[test]
    fn hopf_examples() {
        let w = tuple(vec![HoloForm::dz(), HoloForm::dz().scale(I), HoloForm::zero()], HoloForm::zero(), disc());
        assert!(hopf_differential(&w, &pts()).unwrap().iter().all(|q| q.norm() == 0.0));
        let w = tuple(
            vec![HoloForm::dz().scale(c(2.0, 0.0)), HoloForm::zero(), HoloForm::zero()],
            HoloForm::constant(c(4.0, 0.0)),
            disc(),
        );
        assert!(hopf_differential(&w, &pts()).unwrap().iter().all(|&q| q == c(4.0, 0.0)));
        let z = HoloForm::dz_over(c(0.0, 0.0));
        let w = tuple(vec![z.clone(), z.scale(I), HoloForm::zero()], HoloForm::zero(), annulus());
        assert!(hopf_differential(&w, &pts()).unwrap().iter().all(|q| q.norm() < 1e-15));
    }

    #[test]
    fn metric_examples() {
        let w = tuple(vec![HoloForm::dz(), HoloForm::dz().scale(I), HoloForm::zero()], HoloForm::zero(), disc());
        assert!(metric_density(&w, None, &pts()).unwrap().iter().all(|&s| s == 2.0));
        let zero = tuple(vec![HoloForm::zero(); 3], HoloForm::zero(), disc());
        let one = |_: C| 1.0;
        assert!(metric_density(&zero, Some(&one), &pts()).unwrap().iter().all(|&s| s == 1.0));
        let z = HoloForm::dz_over(c(0.0, 0.0));
        let w = tuple(vec![z.clone(), z.scale(I), HoloForm::zero()], HoloForm::zero(), annulus());
        let s = metric_density(&w, None, &[c(0.5, 0.0), c(0.0, -0.5)]).unwrap();
        assert!(s.iter().all(|&v| (v - 8.0).abs() < 1e-14));
    }

    #[test]
    fn flux_examples() {
        let z = HoloForm::dz_over(c(0.0, 0.0));
        let unit = Cycle::new(c(0.0, 0.0), 1.0, 1, DEFAULT_QUADRATURE_POINTS);
        let w = tuple(vec![z.clone(), z.scale(I), HoloForm::zero(), HoloForm::zero()], HoloForm::zero(), annulus());
        let f = flux(&w, &[unit]).unwrap();
        assert!((f[0][0] - 2.0 * PI).abs() < 1e-14 && f[0][1].abs() < 1e-14 && f[0][2] == 0.0);
        let w = tuple(vec![HoloForm::dz(); 3], HoloForm::zero(), annulus());
        assert!(flux(&w, &[unit]).unwrap()[0].iter().all(|&v| v == 0.0));
        let w = tuple(vec![z.scale(I), HoloForm::zero(), HoloForm::zero()], HoloForm::zero(), annulus());
        // ∮ i dz/z = −2π is real, so its flux component vanishes.
        assert!(flux(&w, &[unit]).unwrap()[0][0].abs() < 1e-14);
        let w = tuple(vec![z.scale(c(-1.0, 0.0)), HoloForm::zero(), HoloForm::zero()], HoloForm::zero(), annulus());
        assert!((flux(&w, &[unit]).unwrap()[0][0] + 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn flux_is_additive_over_repeated_cycles() {
        let f1 = HoloForm::dz_over(c(0.0, 0.0)).exp_scale(&crate::holo::HoloFunction::z().scale(c(0.1, 0.2)));
        let w = tuple(vec![f1, HoloForm::dz_over(c(0.0, 0.0)).scale(c(0.3, 1.0)), HoloForm::dz()], HoloForm::zero(), annulus());
        let cyc = homology_basis(&w.domain)[0];
        let once = flux(&w, &[cyc]).unwrap();
        let twice = flux(&w, &[cyc, cyc]).unwrap();
        for j in 0..3 {
            assert!((twice[0][j] + twice[1][j] - 2.0 * once[0][j]).abs() < 1e-13);
        }
    }

    #[test]
    fn dimension_below_three_rejected() {
        assert!(WeierstrassTuple::new(vec![HoloForm::dz(); 2], c(0.0, 0.0), HoloForm::zero(), disc()).is_err());
    }

    #[test]
    fn split_examples() {
        let (p1, p2) = eta_split(&HoloForm::dz(), &HoloForm::zero(), &disc()).unwrap();
        assert_eq!(p1.eval(c(0.3, 0.1)).unwrap(), c(0.5, 0.0));
        assert_eq!(p2.eval(c(0.3, 0.1)).unwrap(), c(0.0, 0.5));
        let (p1, p2) = eta_split(&HoloForm::dz().scale(c(2.0, 0.0)), &HoloForm::constant(c(4.0, 0.0)), &disc()).unwrap();
        assert_eq!(p1.eval(c(0.3, 0.1)).unwrap(), c(2.0, 0.0));
        assert_eq!(p2.eval(c(0.3, 0.1)).unwrap(), c(0.0, 0.0));
        let a = annulus();
        let (p1, p2) = eta_split(&HoloForm::dz_over(c(0.0, 0.0)), &HoloForm::zero(), &a).unwrap();
        let cyc = homology_basis(&a)[0];
        let (i1, i2) = (period(&p1, &cyc).unwrap(), period(&p2, &cyc).unwrap());
        // Residue oracle: ∮ ½dz/z = πi, ∮ (i/2)dz/z = −π.
        assert!((i1 - c(0.0, PI)).norm() < 1e-13 && (i2 - c(-PI, 0.0)).norm() < 1e-13);
        let v = eta_of(&HoloForm::dz().scale(c(0.5, 0.0)), &HoloForm::dz().scale(c(0.0, 0.5)));
        assert_eq!(v.eval(c(0.2, 0.0)).unwrap(), c(1.0, 0.0));
        let v = eta_of(&HoloForm::dz().scale(c(2.0, 0.0)), &HoloForm::zero());
        assert_eq!(v.eval(c(0.2, 0.0)).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn vanishing_eta_is_rejected() {
        let eta = HoloForm::laurent(Laurent::polynomial(c(0.0, 0.0), vec![c(0.0, 0.0), c(1.0, 0.0)]));
        assert!(matches!(eta_split(&eta, &HoloForm::zero(), &disc()), Err(Error::EtaVanishes { .. })));
    }

    fn coeff() -> impl Strategy<Value = C> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn split_identity_and_round_trip(lead in coeff(), a1 in coeff(), b1 in coeff(), t0 in coeff(), t1 in coeff(), t2 in coeff()) {
            // a₀ dominates the other coefficients on A(0; 0.5, 2), so η has no zeros.
            let a0 = lead + C::new(3.0, 0.0);
            let eta = HoloForm::laurent(Laurent {
                center: C::new(0.0, 0.0),
                poly: vec![a0, a1 * 0.5],
                poles: vec![PoleSeries { center: C::new(0.0, 0.0), coeffs: vec![b1 * 0.5] }],
            });
            let theta = HoloForm::laurent(Laurent {
                center: C::new(0.0, 0.0),
                poly: vec![t0, t1],
                poles: vec![PoleSeries { center: C::new(0.0, 0.0), coeffs: vec![t2] }],
            });
            let a = annulus();
            let (p1, p2) = eta_split(&eta, &theta, &a).unwrap();
            let back = eta_of(&p1, &p2);
            let theta2 = p1.product(&p1) + p2.product(&p2);
            let (q1, q2) = eta_split_unchecked(&back, &theta2);
            for k in 0..1000 {
                let z = C::from_polar(0.5 + 1.5 * (k as f64 / 999.0), 2.399963 * k as f64);
                let (v1, v2, th) = (p1.eval(z).unwrap(), p2.eval(z).unwrap(), theta.eval(z).unwrap());
                prop_assert!((v1 * v1 + v2 * v2 - th).norm() / (1.0 + th.norm()) <= 1e-12);
                prop_assert!((back.eval(z).unwrap() - eta.eval(z).unwrap()).norm() <= 1e-12 * (1.0 + eta.eval(z).unwrap().norm()));
                prop_assert!((q1.eval(z).unwrap() - v1).norm() <= 1e-12 * (1.0 + v1.norm()));
                prop_assert!((q2.eval(z).unwrap() - v2).norm() <= 1e-12 * (1.0 + v2.norm()));
            }
        }
    }
}
