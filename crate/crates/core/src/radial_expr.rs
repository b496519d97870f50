//! Exact calculus on radial functions of the form
//! `Σ c · r^{2j} · (a + r²)^{-s}`.
//!
//! The family is closed under the radial Laplacian
//! `Δf = f'' + (N-1)/r · f'`, which acts on a single term by
//!
//! ```text
//! Δ[r^{2j}(a+r²)^{-s}] = 2j(2j+N-2) r^{2j-2}(a+r²)^{-s}
//!                      - 2s(4j+N)   r^{2j}  (a+r²)^{-s-1}
//!                      + 4s(s+1)    r^{2j+2}(a+r²)^{-s-2}.
//! ```
//!
//! Terms with `a = 0` are pure powers and are stored with `j = 0`, so that
//! `r^{-κ}` is the single term `(j, a, s) = (0, 0, κ/2)`.
//!
//! Top-coefficient naming: the polynomial factor of `(-Δ)^m (a+r²)^{-κ/2}` is
//! `Σ_{j=0..m} b_j(a) r^{2j}`. Its leading coefficient is returned here as
//! `b[m]`; some texts label the same quantity `b_{2m}` after the power of `r`
//! it multiplies.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A single term `coeff · r^{2j} · (a + r²)^{-s}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTerm {
    pub coeff: f64,
    pub j: u32,
    pub a: f64,
    pub s: f64,
}

impl RadialTerm {
    pub fn new(coeff: f64, j: u32, a: f64, s: f64) -> Result<Self> {
        let t = Self { coeff, j, a, s };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(invalid(format!("term shift a = {} must be finite and >= 0", self.a)));
        }
        if !self.coeff.is_finite() || !self.s.is_finite() {
            return Err(invalid("term coefficient and exponent must be finite"));
        }
        Ok(())
    }

    /// Exponent of `r` as `r → ∞`.
    pub fn decay_exponent(&self) -> f64 {
        2.0 * self.j as f64 - 2.0 * self.s
    }

    fn is_pure_power(&self) -> bool {
        self.a == 0.0
    }

    fn eval_positive(&self, r: f64) -> f64 {
        if self.is_pure_power() {
            self.coeff * r.powf(self.decay_exponent())
        } else {
            self.coeff * r.powi(2 * self.j as i32) * (self.a + r * r).powf(-self.s)
        }
    }

    fn singular_at_origin(&self) -> bool {
        self.is_pure_power() && self.decay_exponent() < 0.0
    }
}

/// Finite sum of [`RadialTerm`]s in canonical form: terms sorted by
/// `(a, s, j)`, no repeated keys and no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RadialTerm>", into = "Vec<RadialTerm>")]
pub struct RadialExpr {
    terms: Vec<RadialTerm>,
}

impl TryFrom<Vec<RadialTerm>> for RadialExpr {
    type Error = Error;
    fn try_from(terms: Vec<RadialTerm>) -> Result<Self> {
        Self::from_terms(terms)
    }
}

impl From<RadialExpr> for Vec<RadialTerm> {
    fn from(e: RadialExpr) -> Self {
        e.terms
    }
}

fn same_exponent(s1: f64, s2: f64) -> bool {
    (s1 - s2).abs() <= 1e-13 * s1.abs().max(s2.abs()).max(1.0)
}

impl RadialExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![RadialTerm { coeff: c, j: 0, a: 0.0, s: 0.0 }])
            .expect("constant term is valid")
    }

    /// `c · r^{exponent}`.
    pub fn power(c: f64, exponent: f64) -> Self {
        Self::from_terms(vec![RadialTerm { coeff: c, j: 0, a: 0.0, s: -0.5 * exponent }])
            .expect("finite power term")
    }

    /// `c · (a + r²)^{-s}`.
    pub fn shifted(c: f64, a: f64, s: f64) -> Result<Self> {
        Self::from_terms(vec![RadialTerm::new(c, 0, a, s)?])
    }

    pub fn from_terms(terms: Vec<RadialTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        let mut e = Self { terms };
        e.canonicalize();
        Ok(e)
    }

    pub fn terms(&self) -> &[RadialTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn canonicalize(&mut self) {
        for t in &mut self.terms {
            if t.is_pure_power() && t.j > 0 {
                t.s -= t.j as f64;
                t.j = 0;
            }
        }
        self.terms.sort_by(|x, y| {
            x.a.total_cmp(&y.a)
                .then(x.s.total_cmp(&y.s))
                .then(x.j.cmp(&y.j))
        });
        let mut merged: Vec<RadialTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.a == t.a && last.j == t.j && same_exponent(last.s, t.s) => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        // Merging with a tolerance can break the strict order on s; restore it.
        merged.sort_by(|x, y| {
            x.a.total_cmp(&y.a)
                .then(x.s.partial_cmp(&y.s).unwrap_or(Ordering::Equal))
                .then(x.j.cmp(&y.j))
        });
        self.terms = merged;
    }

    /// Value at `r`. `r = 0` is accepted unless a pure-power term with a
    /// negative exponent is present.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius {r} must be finite and >= 0")));
        }
        if r == 0.0 {
            if self.terms.iter().any(RadialTerm::singular_at_origin) {
                return Err(Error::Domain("singular pure-power term at r = 0".into()));
            }
            return Ok(self
                .terms
                .iter()
                .map(|t| {
                    let zero_power = if t.is_pure_power() { t.s == 0.0 } else { t.j == 0 };
                    match (zero_power, t.is_pure_power()) {
                        (false, _) => 0.0,
                        (true, true) => t.coeff,
                        (true, false) => t.coeff * t.a.powf(-t.s),
                    }
                })
                .sum());
        }
        Ok(self.value_at(r))
    }

    /// Value at a strictly positive radius.
    pub fn value_at(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval_positive(r)).sum()
    }

    /// Radial Laplacian in dimension `n`.
    pub fn laplacian(&self, n: u32) -> Self {
        assert!(n >= 1, "dimension must be >= 1");
        let nf = n as f64;
        let mut out = Vec::with_capacity(3 * self.terms.len());
        for t in &self.terms {
            if t.is_pure_power() {
                // Δ r^e = e(e+N-2) r^{e-2}
                let e = -2.0 * t.s;
                out.push(RadialTerm { coeff: t.coeff * e * (e + nf - 2.0), j: 0, a: 0.0, s: t.s + 1.0 });
                continue;
            }
            let j = t.j as f64;
            if t.j > 0 {
                out.push(RadialTerm {
                    coeff: t.coeff * 2.0 * j * (2.0 * j + nf - 2.0),
                    j: t.j - 1,
                    a: t.a,
                    s: t.s,
                });
            }
            out.push(RadialTerm { coeff: -t.coeff * 2.0 * t.s * (4.0 * j + nf), j: t.j, a: t.a, s: t.s + 1.0 });
            out.push(RadialTerm {
                coeff: t.coeff * 4.0 * t.s * (t.s + 1.0),
                j: t.j + 1,
                a: t.a,
                s: t.s + 2.0,
            });
        }
        let mut e = Self { terms: out };
        e.canonicalize();
        e
    }

    /// `(-Δ)^m` in dimension `n`.
    pub fn neg_laplacian_power(&self, n: u32, m: u32) -> Self {
        let mut e = self.clone();
        for _ in 0..m {
            e = -e.laplacian(n);
        }
        e
    }

    /// Largest exponent of `r` among the terms as `r → ∞`, or `None` for the
    /// zero expression.
    pub fn tail_exponent(&self) -> Option<f64> {
        self.terms.iter().map(RadialTerm::decay_exponent).reduce(f64::max)
    }

    /// Sum of coefficients of the terms sharing the leading exponent.
    pub fn tail_coefficient(&self) -> f64 {
        match self.tail_exponent() {
            None => 0.0,
            Some(e) => self
                .terms
                .iter()
                .filter(|t| same_exponent(t.decay_exponent(), e))
                .map(|t| t.coeff)
                .sum(),
        }
    }

    /// Distinct positive shifts; `sqrt(a)` is the length scale of each.
    pub fn shifts(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.terms.iter().map(|t| t.a).filter(|a| *a > 0.0).collect();
        a.dedup();
        a
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut e = Self { terms: self.terms.iter().map(|t| RadialTerm { coeff: t.coeff * c, ..*t }).collect() };
        e.canonicalize();
        e
    }
}

impl Add for RadialExpr {
    type Output = RadialExpr;
    fn add(mut self, rhs: RadialExpr) -> RadialExpr {
        self.terms.extend(rhs.terms);
        self.canonicalize();
        self
    }
}

impl Neg for RadialExpr {
    type Output = RadialExpr;
    fn neg(self) -> RadialExpr {
        self.scaled(-1.0)
    }
}

impl Sub for RadialExpr {
    type Output = RadialExpr;
    fn sub(self, rhs: RadialExpr) -> RadialExpr {
        self + (-rhs)
    }
}

impl Mul<f64> for RadialExpr {
    type Output = RadialExpr;
    fn mul(self, c: f64) -> RadialExpr {
        self.scaled(c)
    }
}

/// `Π_{j=1..m} (κ+2j-2)(N-κ-2j)`, the coefficient in
/// `(-Δ)^m r^{-κ} = c · r^{-κ-2m}`.
pub fn power_law_coefficient(n: u32, m: u32, kappa: f64) -> f64 {
    let nf = n as f64;
    (1..=m)
        .map(|j| {
            let j = j as f64;
            (kappa + 2.0 * j - 2.0) * (nf - kappa - 2.0 * j)
        })
        .product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients `b_0..b_m` with
/// `(-Δ)^m (a+r²)^{-κ/2} = (a+r²)^{-κ/2-2m} Σ_j b_j r^{2j}`.
pub fn b_coefficients(n: u32, m: u32, kappa: f64, a: f64) -> Result<Vec<f64>> {
    if m == 0 || n == 0 {
        return Err(invalid("need N >= 1 and m >= 1"));
    }
    // The factorisation holds for every κ > 0; positivity of b_m(0) needs κ < N-2m.
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa = {kappa} must be positive")));
    }
    if !(a >= 0.0) {
        return Err(invalid(format!("shift a = {a} must be >= 0")));
    }
    let v = RadialExpr::shifted(1.0, a, 0.5 * kappa)?;
    let f = v.neg_laplacian_power(n, m);
    let s0 = 0.5 * kappa + 2.0 * m as f64;

    let mut poly = vec![0.0; 2 * m as usize + 3];
    for t in f.terms() {
        let k_real = s0 - t.s;
        let k = k_real.round();
        if (k_real - k).abs() > 1e-9 || k < 0.0 {
            return Err(Error::Representation(format!(
                "term exponent {} does not differ from {s0} by a non-negative integer",
                t.s
            )));
        }
        let k = k as u32;
        if t.a == 0.0 {
            // r^{-2s} = r^{2k} (r²)^{-s0}
            poly[k as usize] += t.coeff;
        } else {
            for i in 0..=k {
                let deg = (t.j + i) as usize;
                if deg >= poly.len() {
                    poly.resize(deg + 1, 0.0);
                }
                poly[deg] += t.coeff * binomial(k, i) * t.a.powi((k - i) as i32);
            }
        }
    }
    let scale = poly.iter().fold(0.0_f64, |acc, c| acc.max(c.abs())).max(f64::MIN_POSITIVE);
    if let Some((deg, c)) = poly.iter().enumerate().skip(m as usize + 1).find(|(_, c)| c.abs() > 1e-9 * scale) {
        return Err(Error::Representation(format!(
            "polynomial factor has degree {deg} > m = {m} (coefficient {c:e})"
        )));
    }
    poly.truncate(m as usize + 1);
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn eval_examples() {
        let e = RadialExpr::shifted(1.0, 1.0, 1.0).unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 0.5);
        assert_eq!(RadialExpr::zero().eval(3.7).unwrap(), 0.0);
        let p = RadialExpr::from_terms(vec![RadialTerm::new(2.0, 1, 0.0, 2.0).unwrap()]).unwrap();
        assert!((p.eval(2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_origin_rules() {
        let e = RadialExpr::shifted(3.0, 4.0, 0.5).unwrap();
        assert!((e.eval(0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(RadialExpr::power(1.0, -1.0).eval(0.0).is_err());
        assert_eq!(RadialExpr::power(2.0, 2.0).eval(0.0).unwrap(), 0.0);
        assert_eq!(RadialExpr::constant(2.0).eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn laplacian_examples() {
        // Δ(1+r²)^{-1} at the origin in N=3 is N·f''(0) = 3·(-2) = -6.
        let f = RadialExpr::shifted(1.0, 1.0, 1.0).unwrap();
        assert!((f.laplacian(3).eval(0.0).unwrap() + 6.0).abs() < 1e-14);
        assert!(RadialExpr::constant(5.0).laplacian(4).is_zero());
        assert!(RadialExpr::power(1.0, -1.0).laplacian(3).is_zero());
    }

    #[test]
    fn neg_laplacian_examples() {
        assert!(RadialExpr::constant(2.0).neg_laplacian_power(5, 2).is_zero());
        let w = RadialExpr::power(1.0, -1.0).neg_laplacian_power(5, 1);
        assert_eq!(w, RadialExpr::power(2.0, -3.0));
        let (n, m, kappa) = (9, 2, 1.5);
        let lhs = RadialExpr::power(1.0, -kappa).neg_laplacian_power(n, m);
        let rhs = RadialExpr::power(power_law_coefficient(n, m, kappa), -kappa - 2.0 * m as f64);
        for r in [0.3, 1.0, 7.0] {
            assert!(close(lhs.value_at(r), rhs.value_at(r), 1e-13));
        }
    }

    #[test]
    fn power_law_coefficient_examples() {
        assert_eq!(power_law_coefficient(5, 1, 1.0), 2.0);
        assert_eq!(power_law_coefficient(7, 2, 3.0), 0.0);
        assert_eq!(power_law_coefficient(9, 2, 2.0), 120.0);
    }

    #[test]
    fn b_coefficient_examples() {
        let b = b_coefficients(5, 1, 1.0, 1.0).unwrap();
        assert!(close(b[0], 5.0, 1e-14) && close(b[1], 2.0, 1e-14), "{b:?}");
        let b0 = b_coefficients(9, 2, 2.0, 0.0).unwrap();
        assert_eq!(b0[0], 0.0);
        assert_eq!(b0[1], 0.0);
        assert!(close(b0[2], 120.0, 1e-13));
    }

    #[test]
    fn b_top_vanishes_at_boundary_kappa() {
        let b = b_coefficients(5, 1, 3.0, 0.0).unwrap();
        assert_eq!(b[1], 0.0);
        assert!(b_coefficients(5, 1, 0.0, 1.0).is_err());
    }

    #[test]
    fn pure_power_terms_are_normalised() {
        let e = RadialExpr::from_terms(vec![
            RadialTerm::new(1.0, 2, 0.0, 3.0).unwrap(),
            RadialTerm::new(1.0, 0, 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.terms()[0].coeff, 2.0);
    }

    #[test]
    fn json_is_array_of_terms() {
        let e = RadialExpr::shifted(1.5, 2.0, 0.25).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"[{"coeff":1.5,"j":0,"a":2.0,"s":0.25}]"#);
        let back: RadialExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
