use std::f64::consts::PI;

use rayon::prelude::*;

use super::{HoloForm, Laurent};
use crate::domain::Cycle;
use crate::{Error, Result, C, I};

/// Relative agreement required between a quadrature and its doubling.
pub const PERIOD_REL_TOL: f64 = 1e-10;

/// Extra doublings attempted before giving up.
const MAX_DOUBLINGS: u32 = 5;

/// `Σ f(z_k) w_k` and `Σ |f(z_k)| |w_k|` with `n` trapezoid nodes.
fn trapezoid_with_mass(form: &HoloForm, cycle: &Cycle, n: usize) -> Result<(C, f64)> {
    let (nodes, weights) = cycle.nodes_and_weights(n);
    let values = form.eval_many(&nodes)?;
    let mut sum = C::new(0.0, 0.0);
    let mut mass = 0.0;
    for (v, w) in values.iter().zip(&weights) {
        sum += v * w;
        mass += v.norm() * w.norm();
    }
    Ok((sum, mass))
}

pub fn trapezoid(form: &HoloForm, cycle: &Cycle, n: usize) -> Result<C> {
    trapezoid_with_mass(form, cycle, n).map(|(s, _)| s)
}

/// Exact period of a Laurent form: `2πi · orientation · Σ enclosed residues`.
pub fn residue_period(l: &Laurent, cycle: &Cycle) -> C {
    2.0 * PI * I * cycle.orientation as f64 * l.enclosed_residue(cycle.center, cycle.radius)
}

/// Period together with the integrand mass `∮|θ||dz|`, the natural scale
/// for judging whether a period is zero.
pub fn period_with_scale(form: &HoloForm, cycle: &Cycle) -> Result<(C, f64)> {
    let mut n = cycle.quadrature_points;
    let (mut coarse, _) = trapezoid_with_mass(form, cycle, n)?;
    for _ in 0..=MAX_DOUBLINGS {
        n *= 2;
        let (fine, mass) = trapezoid_with_mass(form, cycle, n)?;
        let scale = fine.norm().max(mass);
        let rel = (fine - coarse).norm() / scale.max(f64::MIN_POSITIVE);
        if rel <= PERIOD_REL_TOL || scale == 0.0 {
            if let Some(l) = form.as_laurent() {
                let exact = residue_period(l, cycle);
                let gap = (exact - fine).norm() / scale.max(f64::MIN_POSITIVE);
                if gap > PERIOD_REL_TOL && scale > 0.0 {
                    return Err(Error::QuadratureDivergence {
                        coarse: format!("{exact}"),
                        fine: format!("{fine}"),
                        rel: gap,
                    });
                }
                return Ok((exact, mass));
            }
            return Ok((fine, mass));
        }
        if n >= cycle.quadrature_points << MAX_DOUBLINGS {
            return Err(Error::QuadratureDivergence { coarse: format!("{coarse}"), fine: format!("{fine}"), rel });
        }
        coarse = fine;
    }
    unreachable!("loop always returns")
}

/// `∮_c θ` with doubling validation.
pub fn period(form: &HoloForm, cycle: &Cycle) -> Result<C> {
    period_with_scale(form, cycle).map(|(p, _)| p)
}

/// `max |θ/dz|` over the samples.
pub fn sup_norm(form: &HoloForm, samples: &[C]) -> Result<f64> {
    let values: Vec<f64> = samples.par_iter().map(|&z| form.eval(z).map(|v| v.norm())).collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}
