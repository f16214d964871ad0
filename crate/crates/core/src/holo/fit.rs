use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{HoloForm, Laurent, PoleSeries};
use crate::domain::{winding_number, CircularDomain, Cycle};
use crate::{Error, Result, C, I};

/// Condition estimate above which a fit is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Per-target row weights (all ones when absent).
    pub weights: Option<Vec<f64>>,
    /// Reject the fit if the max residual exceeds this.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub coefficients: usize,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub condition: f64,
    pub constraint_residual: f64,
}

/// Column layout: polynomial powers `0..=k_pos` in `(z - c₀)/R`, then for
/// each hole the powers `1..=k_neg` of `r_h/(z - c_h)`.
struct Basis {
    c0: C,
    big_r: f64,
    holes: Vec<(C, f64)>,
    k_neg: usize,
    k_pos: usize,
}

impl Basis {
    fn len(&self) -> usize {
        self.k_pos + 1 + self.holes.len() * self.k_neg
    }

    fn row(&self, z: C) -> Vec<C> {
        let mut out = Vec::with_capacity(self.len());
        let w = (z - self.c0) / self.big_r;
        let mut p = C::new(1.0, 0.0);
        for _ in 0..=self.k_pos {
            out.push(p);
            p *= w;
        }
        for &(c, r) in &self.holes {
            let u = r / (z - c);
            let mut p = u;
            for _ in 0..self.k_neg {
                out.push(p);
                p *= u;
            }
        }
        out
    }

    /// Periods of the scaled basis over a cycle: only the first pole power
    /// of each enclosed hole contributes.
    fn period_row(&self, cycle: &Cycle) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.len()];
        if self.k_neg == 0 {
            return out;
        }
        for (h, &(c, r)) in self.holes.iter().enumerate() {
            let w = winding_number(cycle, c) as f64;
            out[self.k_pos + 1 + h * self.k_neg] = 2.0 * PI * I * w * r;
        }
        out
    }

    fn to_form(&self, x: &DVector<C>) -> HoloForm {
        let poly = (0..=self.k_pos).map(|k| x[k] / self.big_r.powi(k as i32)).collect();
        let poles = self
            .holes
            .iter()
            .enumerate()
            .filter(|_| self.k_neg > 0)
            .map(|(h, &(c, r))| PoleSeries {
                center: c,
                coeffs: (0..self.k_neg).map(|k| x[self.k_pos + 1 + h * self.k_neg + k] * r.powi(k as i32 + 1)).collect(),
            })
            .collect();
        HoloForm::laurent(Laurent { center: self.c0, poly, poles })
    }
}

/// Minimum-norm solution and orthonormal nullspace basis of `C x = d`.
fn constraint_split(cm: &DMatrix<C>, d: &DVector<C>) -> Result<(DVector<C>, DMatrix<C>)> {
    let n = cm.ncols();
    if cm.nrows() == 0 {
        return Ok((DVector::zeros(n), DMatrix::identity(n, n)));
    }
    // Pad to square so the SVD exposes the full right singular basis.
    let rows = cm.nrows().max(n);
    let mut padded = DMatrix::<C>::zeros(rows, n);
    padded.view_mut((0, 0), (cm.nrows(), n)).copy_from(cm);
    let mut rhs = DVector::<C>::zeros(rows);
    rhs.rows_mut(0, d.len()).copy_from(d);
    let svd = padded.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = smax * 1e-12;
    let mut xp = DVector::<C>::zeros(n);
    let mut null = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let vi = v_t.row(i).adjoint();
        if s > cut && s > 0.0 {
            let coef = (u.column(i).adjoint() * &rhs)[0] / s;
            xp += vi * coef;
        } else {
            null.push(vi);
        }
    }
    let resid = (cm * &xp - d).norm();
    if resid > 1e-10 * d.norm().max(1.0) {
        return Err(Error::IncompatibleTargets(format!(
            "period constraints are inconsistent (residual {resid:e})"
        )));
    }
    let nm = if null.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&null) };
    Ok((xp, nm))
}

/// Weighted least-squares Laurent fit with exact linear period constraints.
pub fn laurent_fit(
    targets: &[(C, C)],
    domain: &CircularDomain,
    degrees: (usize, usize),
    constraints: &[(Cycle, C)],
    opts: &FitOptions,
) -> Result<(HoloForm, FitReport)> {
    let basis = Basis {
        c0: domain.outer_center,
        big_r: domain.outer_radius,
        holes: domain.holes.iter().map(|h| (h.center, h.radius)).collect(),
        k_neg: degrees.0,
        k_pos: degrees.1,
    };
    let n = basis.len();
    if targets.len() < n {
        return Err(Error::IllConditioned { condition: f64::INFINITY });
    }
    if let Some(w) = &opts.weights {
        if w.len() != targets.len() {
            return Err(Error::Config(format!("{} weights for {} targets", w.len(), targets.len())));
        }
    }
    let weight = |i: usize| opts.weights.as_ref().map_or(1.0, |w| w[i]);

    let rows: Vec<Vec<C>> = targets.par_iter().map(|&(z, _)| basis.row(z)).collect();
    let a = DMatrix::from_fn(targets.len(), n, |i, j| rows[i][j]);
    let b = DVector::from_iterator(targets.len(), targets.iter().map(|t| t.1));

    let cm = DMatrix::from_fn(constraints.len(), n, |i, j| basis.period_row(&constraints[i].0)[j]);
    let d = DVector::from_iterator(constraints.len(), constraints.iter().map(|c| c.1));
    let (xp, null) = constraint_split(&cm, &d)?;

    let mut x = xp.clone();
    let mut condition = 1.0;
    if null.ncols() > 0 {
        let mut m = &a * &null;
        let mut rhs = &b - &a * &xp;
        for i in 0..targets.len() {
            let w = weight(i);
            m.row_mut(i).scale_mut(w);
            rhs[i] *= w;
        }
        let qr = m.qr();
        let qtb = qr.q().adjoint() * &rhs;
        let svd = qr.r().svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        condition = if smax == 0.0 { f64::INFINITY } else { smax / smin };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let y = svd.solve(&qtb, 0.0).map_err(|e| Error::Config(e.to_string()))?;
        x += &null * y;
    }

    let fitted = &a * &x;
    let mut max_residual: f64 = 0.0;
    let mut sq = 0.0;
    for i in 0..targets.len() {
        let r = (fitted[i] - b[i]).norm();
        max_residual = max_residual.max(r);
        sq += r * r;
    }
    let report = FitReport {
        coefficients: n,
        max_residual,
        rms_residual: (sq / targets.len() as f64).sqrt(),
        condition,
        constraint_residual: if constraints.is_empty() { 0.0 } else { (&cm * &x - &d).norm() },
    };
    if let Some(tol) = opts.tol {
        if max_residual > tol {
            return Err(Error::ResidualTooLarge { residual: max_residual, tol });
        }
    }
    Ok((basis.to_form(&x), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::homology_basis;
    use crate::holo::period;

    fn annulus() -> CircularDomain {
        CircularDomain::annulus(C::new(0.0, 0.0), 0.5, 1.0).unwrap()
    }

    fn samples_of(f: &HoloForm, d: &CircularDomain) -> Vec<(C, C)> {
        let mut pts = d.boundary_samples(64);
        pts.extend((0..64).map(|k| C::from_polar(0.75, k as f64 * 0.1)));
        pts.into_iter().map(|z| (z, f.eval(z).unwrap())).collect()
    }

    #[test]
    fn reproduces_dz_over_z() {
        let d = annulus();
        let t = samples_of(&HoloForm::dz_over(C::new(0.0, 0.0)), &d);
        let (f, rep) = laurent_fit(&t, &d, (3, 3), &[], &FitOptions::default()).unwrap();
        let l = f.as_laurent().unwrap();
        assert!((l.poles[0].coeffs[0] - C::new(1.0, 0.0)).norm() < 1e-12);
        for c in l.poly.iter().chain(&l.poles[0].coeffs[1..]) {
            assert!(c.norm() < 1e-12);
        }
        assert!(rep.max_residual < 1e-12);
    }

    #[test]
    fn contradicting_constraint_is_reported() {
        let d = annulus();
        let t = samples_of(&HoloForm::dz_over(C::new(0.0, 0.0)), &d);
        let cyc = homology_basis(&d)[0];
        let (f, rep) = laurent_fit(&t, &d, (3, 3), &[(cyc, C::new(0.0, 0.0))], &FitOptions::default()).unwrap();
        let l = f.as_laurent().unwrap();
        assert!(l.poles[0].coeffs[0].norm() < 1e-14);
        assert!(period(&f, &cyc).unwrap().norm() < 1e-12);
        assert!(rep.max_residual > 1.0);
        let strict = FitOptions { tol: Some(1e-3), ..Default::default() };
        assert!(matches!(
            laurent_fit(&t, &d, (3, 3), &[(cyc, C::new(0.0, 0.0))], &strict),
            Err(Error::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn zero_targets_give_zero_form() {
        let d = annulus();
        let t: Vec<(C, C)> = d.boundary_samples(32).into_iter().map(|z| (z, C::new(0.0, 0.0))).collect();
        let (f, _) = laurent_fit(&t, &d, (2, 2), &[], &FitOptions::default()).unwrap();
        assert_eq!(f.eval(C::new(0.7, 0.1)).unwrap(), C::new(0.0, 0.0));
    }

    #[test]
    fn ansatz_space_is_reproduced() {
        let d = CircularDomain::new(
            C::new(0.0, 0.0),
            1.0,
            vec![
                crate::domain::Hole { center: C::new(-0.5, 0.0), radius: 0.1 },
                crate::domain::Hole { center: C::new(0.5, 0.0), radius: 0.1 },
            ],
            "",
        )
        .unwrap();
        let truth = Laurent {
            center: C::new(0.0, 0.0),
            poly: vec![C::new(0.3, 0.1), C::new(-1.0, 0.2), C::new(0.0, 0.5)],
            poles: vec![
                PoleSeries { center: C::new(-0.5, 0.0), coeffs: vec![C::new(0.02, 0.0), C::new(0.0, 0.001)] },
                PoleSeries { center: C::new(0.5, 0.0), coeffs: vec![C::new(-0.01, 0.03), C::new(0.0, 0.0)] },
            ],
        };
        let t = samples_of(&HoloForm::laurent(truth.clone()), &d);
        let (f, _) = laurent_fit(&t, &d, (2, 2), &[], &FitOptions::default()).unwrap();
        let l = f.as_laurent().unwrap();
        for (a, b) in l.poly.iter().zip(&truth.poly) {
            assert!((a - b).norm() < 1e-10);
        }
        for (p, q) in l.poles.iter().zip(&truth.poles) {
            for (a, b) in p.coeffs.iter().zip(&q.coeffs) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn inconsistent_constraints_are_rejected() {
        let d = CircularDomain::disc(C::new(0.0, 0.0), 1.0).unwrap();
        let t: Vec<(C, C)> = d.boundary_samples(32).into_iter().map(|z| (z, C::new(1.0, 0.0))).collect();
        let cyc = Cycle::new(C::new(0.0, 0.0), 0.5, 1, 64);
        assert!(matches!(
            laurent_fit(&t, &d, (0, 3), &[(cyc, C::new(1.0, 0.0))], &FitOptions::default()),
            Err(Error::IncompatibleTargets(_))
        ));
    }
}
