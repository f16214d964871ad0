//! Exactly evaluable holomorphic functions and 1-forms on circular domains.
//!
//! Every form is written against the reference differential `dz`, so a
//! [`HoloForm`] is stored as the scalar `θ/dz`. Quadratic differentials use
//! the same representation against `dz²`. Evaluation is exact for Laurent
//! nodes (Horner) and composes exactly through the combinators.

mod fit;
pub mod hex;
mod period;

use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C};

pub use fit::{laurent_fit, FitOptions, FitReport};
pub use period::{period, period_with_scale, residue_period, sup_norm, trapezoid, PERIOD_REL_TOL};

/// Maximum expression-tree depth.
pub const MAX_DEPTH: usize = 32;

/// Principal part at one pole center: `Σ_k coeffs[k-1] (z - center)^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSeries {
    #[serde(with = "hex::complex")]
    pub center: C,
    #[serde(with = "hex::complex_vec")]
    pub coeffs: Vec<C>,
}

/// `Σ_k poly[k] (z - center)^k + Σ_poles principal parts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Laurent {
    #[serde(with = "hex::complex")]
    pub center: C,
    #[serde(with = "hex::complex_vec")]
    pub poly: Vec<C>,
    #[serde(default)]
    pub poles: Vec<PoleSeries>,
}

impl Laurent {
    pub fn constant(c: C) -> Self {
        Laurent { center: C::new(0.0, 0.0), poly: vec![c], poles: Vec::new() }
    }

    pub fn polynomial(center: C, poly: Vec<C>) -> Self {
        Laurent { center, poly, poles: Vec::new() }
    }

    /// `coeff · (z - center)^{-k}`.
    pub fn pole(center: C, k: usize, coeff: C) -> Self {
        let mut coeffs = vec![C::new(0.0, 0.0); k];
        coeffs[k - 1] = coeff;
        Laurent { center: C::new(0.0, 0.0), poly: Vec::new(), poles: vec![PoleSeries { center, coeffs }] }
    }

    pub fn eval(&self, z: C) -> Result<C> {
        let w = z - self.center;
        let mut acc = C::new(0.0, 0.0);
        for a in self.poly.iter().rev() {
            acc = acc * w + a;
        }
        for p in &self.poles {
            let d = z - p.center;
            if d.norm() <= f64::MIN_POSITIVE {
                return Err(Error::EvalOutsideDomain { re: z.re, im: z.im });
            }
            let inv = d.inv();
            let mut s = C::new(0.0, 0.0);
            for b in p.coeffs.iter().rev() {
                s = (s + b) * inv;
            }
            acc += s;
        }
        Ok(acc)
    }

    /// Residue sum `Σ coeffs[0]` over pole centers strictly inside the circle.
    pub fn enclosed_residue(&self, center: C, radius: f64) -> C {
        self.poles
            .iter()
            .filter(|p| (p.center - center).norm() < radius)
            .filter_map(|p| p.coeffs.first().copied())
            .sum()
    }

    fn scaled(&self, s: C) -> Laurent {
        Laurent {
            center: self.center,
            poly: self.poly.iter().map(|a| a * s).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| PoleSeries { center: p.center, coeffs: p.coeffs.iter().map(|b| b * s).collect() })
                .collect(),
        }
    }

    /// Exact sum when the polynomial parts share a center (or one is empty).
    fn try_add(&self, other: &Laurent) -> Option<Laurent> {
        let center = if self.poly.is_empty() {
            other.center
        } else if other.poly.is_empty() || other.center == self.center {
            self.center
        } else {
            return None;
        };
        let n = self.poly.len().max(other.poly.len());
        let poly = (0..n)
            .map(|k| self.poly.get(k).copied().unwrap_or_default() + other.poly.get(k).copied().unwrap_or_default())
            .collect();
        let mut poles = self.poles.clone();
        for p in &other.poles {
            match poles.iter_mut().find(|q| q.center == p.center) {
                Some(q) => {
                    if q.coeffs.len() < p.coeffs.len() {
                        q.coeffs.resize(p.coeffs.len(), C::new(0.0, 0.0));
                    }
                    for (k, b) in p.coeffs.iter().enumerate() {
                        q.coeffs[k] += b;
                    }
                }
                None => poles.push(p.clone()),
            }
        }
        Some(Laurent { center, poly, poles })
    }
}

/// Expression tree shared by functions and forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    Laurent(Laurent),
    Sum { terms: Vec<Expr> },
    Scale {
        #[serde(with = "hex::complex")]
        factor: C,
        inner: Box<Expr>,
    },
    Product { left: Box<Expr>, right: Box<Expr> },
    Quotient { num: Box<Expr>, den: Box<Expr> },
    /// `e^{exponent} · base`.
    ExpScale { exponent: Box<Expr>, base: Box<Expr> },
}

impl Expr {
    pub fn eval(&self, z: C) -> Result<C> {
        let v = match self {
            Expr::Laurent(l) => l.eval(z)?,
            Expr::Sum { terms } => {
                let mut acc = C::new(0.0, 0.0);
                for t in terms {
                    acc += t.eval(z)?;
                }
                acc
            }
            Expr::Scale { factor, inner } => factor * inner.eval(z)?,
            Expr::Product { left, right } => left.eval(z)? * right.eval(z)?,
            Expr::Quotient { num, den } => {
                let d = den.eval(z)?;
                if d.norm() == 0.0 {
                    return Err(Error::EvalOutsideDomain { re: z.re, im: z.im });
                }
                num.eval(z)? / d
            }
            Expr::ExpScale { exponent, base } => exponent.eval(z)?.exp() * base.eval(z)?,
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvalOutsideDomain { re: z.re, im: z.im })
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Laurent(_) => 1,
            Expr::Sum { terms } => 1 + terms.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Scale { inner, .. } => 1 + inner.depth(),
            Expr::Product { left, right } => 1 + left.depth().max(right.depth()),
            Expr::Quotient { num, den } => 1 + num.depth().max(den.depth()),
            Expr::ExpScale { exponent, base } => 1 + exponent.depth().max(base.depth()),
        }
    }

    pub fn as_laurent(&self) -> Option<&Laurent> {
        match self {
            Expr::Laurent(l) => Some(l),
            _ => None,
        }
    }

    /// Whether the tree contains any exponential node.
    pub fn has_exp(&self) -> bool {
        match self {
            Expr::Laurent(_) => false,
            Expr::Sum { terms } => terms.iter().any(Expr::has_exp),
            Expr::Scale { inner, .. } => inner.has_exp(),
            Expr::Product { left, right } => left.has_exp() || right.has_exp(),
            Expr::Quotient { num, den } => num.has_exp() || den.has_exp(),
            Expr::ExpScale { .. } => true,
        }
    }

    fn add(self, other: Expr) -> Expr {
        if let (Expr::Laurent(a), Expr::Laurent(b)) = (&self, &other) {
            if let Some(s) = a.try_add(b) {
                return Expr::Laurent(s);
            }
        }
        match (self, other) {
            (Expr::Sum { mut terms }, Expr::Sum { terms: more }) => {
                terms.extend(more);
                Expr::Sum { terms }
            }
            (Expr::Sum { mut terms }, e) => {
                terms.push(e);
                Expr::Sum { terms }
            }
            (a, b) => Expr::Sum { terms: vec![a, b] },
        }
    }

    fn scale(self, s: C) -> Expr {
        match self {
            Expr::Laurent(l) => Expr::Laurent(l.scaled(s)),
            Expr::Scale { factor, inner } => Expr::Scale { factor: factor * s, inner },
            e => Expr::Scale { factor: s, inner: Box::new(e) },
        }
    }
}

macro_rules! expr_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Expr);

        impl $name {
            pub fn expr(&self) -> &Expr {
                &self.0
            }

            pub fn eval(&self, z: C) -> Result<C> {
                self.0.eval(z)
            }

            /// Ordered batch evaluation (parallel, scheduling-independent).
            pub fn eval_many(&self, points: &[C]) -> Result<Vec<C>> {
                points.par_iter().map(|&z| self.0.eval(z)).collect()
            }

            pub fn depth(&self) -> usize {
                self.0.depth()
            }

            pub fn check_depth(&self) -> Result<()> {
                let d = self.depth();
                if d > MAX_DEPTH {
                    Err(Error::TreeTooDeep(d))
                } else {
                    Ok(())
                }
            }

            pub fn laurent(l: Laurent) -> Self {
                $name(Expr::Laurent(l))
            }

            pub fn constant(c: C) -> Self {
                $name(Expr::Laurent(Laurent::constant(c)))
            }

            pub fn zero() -> Self {
                Self::constant(C::new(0.0, 0.0))
            }

            pub fn scale(&self, s: C) -> Self {
                $name(self.0.clone().scale(s))
            }

            pub fn as_laurent(&self) -> Option<&Laurent> {
                self.0.as_laurent()
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0.add(rhs.0))
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(self.0.clone().add(rhs.0.clone()))
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0.add(rhs.0.scale(C::new(-1.0, 0.0))))
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                self.clone() - rhs.clone()
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scale(C::new(-1.0, 0.0))
            }
        }

        impl Mul<C> for $name {
            type Output = $name;
            fn mul(self, s: C) -> $name {
                $name(self.0.scale(s))
            }
        }

        impl Mul<C> for &$name {
            type Output = $name;
            fn mul(self, s: C) -> $name {
                self.scale(s)
            }
        }
    };
}

expr_newtype!(HoloFunction);
expr_newtype!(HoloForm);

impl HoloFunction {
    /// The coordinate function `z`.
    pub fn z() -> Self {
        HoloFunction::laurent(Laurent::polynomial(C::new(0.0, 0.0), vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]))
    }

    /// `(z - center)^k` for `k >= 0`.
    pub fn power(center: C, k: usize) -> Self {
        let mut poly = vec![C::new(0.0, 0.0); k + 1];
        poly[k] = C::new(1.0, 0.0);
        HoloFunction::laurent(Laurent::polynomial(center, poly))
    }

    /// `(z - center)^{-k}` for `k >= 1`.
    pub fn inverse_power(center: C, k: usize) -> Self {
        HoloFunction::laurent(Laurent::pole(center, k, C::new(1.0, 0.0)))
    }

    pub fn times(&self, form: &HoloForm) -> HoloForm {
        HoloForm(Expr::Product { left: Box::new(self.0.clone()), right: Box::new(form.0.clone()) })
    }
}

impl HoloForm {
    /// The reference differential `dz`.
    pub fn dz() -> Self {
        HoloForm::constant(C::new(1.0, 0.0))
    }

    /// `(z - center)^{-1} dz`.
    pub fn dz_over(center: C) -> Self {
        HoloForm::laurent(Laurent::pole(center, 1, C::new(1.0, 0.0)))
    }

    /// Pointwise product of two forms (a quadratic differential over `dz²`).
    pub fn product(&self, other: &HoloForm) -> HoloForm {
        HoloForm(Expr::Product { left: Box::new(self.0.clone()), right: Box::new(other.0.clone()) })
    }

    /// Pointwise quotient (e.g. `Θ/η`, a 1-form when `Θ` is quadratic).
    pub fn quotient(&self, den: &HoloForm) -> HoloForm {
        HoloForm(Expr::Quotient { num: Box::new(self.0.clone()), den: Box::new(den.0.clone()) })
    }

    /// `e^f · self`.
    pub fn exp_scale(&self, f: &HoloFunction) -> HoloForm {
        HoloForm(Expr::ExpScale { exponent: Box::new(f.0.clone()), base: Box::new(self.0.clone()) })
    }

    /// A form viewed as a function (e.g. to use `θ/dz` as a multiplier).
    pub fn as_function(&self) -> HoloFunction {
        HoloFunction(self.0.clone())
    }
}
