//! Radial profiles: the common interface used by the convolution and
//! potential solvers, tabulated profiles with their file formats, and the
//! smooth cut-off plateau.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial_expr::RadialExpr;

/// Behaviour of a profile beyond the region where it is known explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// Identically zero for `r > radius`.
    Compact { radius: f64 },
    /// Asymptotically `coeff · r^exponent`.
    Power { exponent: f64, coeff: f64 },
    /// No declared behaviour; callers needing the tail must fail.
    Unknown,
}

/// A non-negative radial function on `(0, ∞)`.
pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;

    /// Radii where the profile has kinks, jumps or changes scale. Used as
    /// quadrature breakpoints.
    fn features(&self) -> Vec<f64> {
        Vec::new()
    }

    fn tail(&self) -> Tail;
}

impl<P: RadialProfile + ?Sized> RadialProfile for &P {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn features(&self) -> Vec<f64> {
        (**self).features()
    }
    fn tail(&self) -> Tail {
        (**self).tail()
    }
}

impl RadialProfile for RadialExpr {
    fn value(&self, r: f64) -> f64 {
        if r > 0.0 {
            self.value_at(r)
        } else {
            self.eval(r).unwrap_or(f64::NAN)
        }
    }

    fn features(&self) -> Vec<f64> {
        self.shifts().into_iter().map(f64::sqrt).collect()
    }

    fn tail(&self) -> Tail {
        match self.tail_exponent() {
            None => Tail::Compact { radius: 0.0 },
            Some(exponent) => Tail::Power { exponent, coeff: self.tail_coefficient() },
        }
    }
}

/// A profile given by a closure, with declared features and tail.
pub struct FnProfile<F> {
    f: F,
    features: Vec<f64>,
    tail: Tail,
}

impl<F: Fn(f64) -> f64 + Sync> FnProfile<F> {
    pub fn new(f: F, features: Vec<f64>, tail: Tail) -> Self {
        Self { f, features, tail }
    }
}

impl<F: Fn(f64) -> f64 + Sync> RadialProfile for FnProfile<F> {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn features(&self) -> Vec<f64> {
        self.features.clone()
    }
    fn tail(&self) -> Tail {
        self.tail
    }
}

/// `exp(-1/t)` for `t > 0`, zero otherwise.
fn smooth_bump_edge(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ radial plateau: 1 on `[0, R]`, 0 on `[2R, ∞)`, with the
/// `exp(-1/t)` smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothPlateau {
    pub radius: f64,
}

impl SmoothPlateau {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("plateau radius {radius} must be positive")));
        }
        Ok(Self { radius })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let t = r / self.radius - 1.0;
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let up = smooth_bump_edge(1.0 - t);
        up / (up + smooth_bump_edge(t))
    }
}

impl RadialProfile for SmoothPlateau {
    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }
    fn features(&self) -> Vec<f64> {
        vec![self.radius, 1.5 * self.radius, 2.0 * self.radius]
    }
    fn tail(&self) -> Tail {
        Tail::Compact { radius: 2.0 * self.radius }
    }
}

/// `n` logarithmically spaced radii from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min) || n < 2 {
        return Err(invalid(format!("log grid needs 0 < min < max and n >= 2 (got {min}, {max}, {n})")));
    }
    let (lmin, lmax) = (min.ln(), max.ln());
    let step = (lmax - lmin) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| (lmin + step * i as f64).exp()).collect();
    g[0] = min;
    g[n - 1] = max;
    Ok(g)
}

/// Radial function sampled on a strictly increasing positive grid.
///
/// Between nodes the profile is the cubic Hermite interpolant in `r`, using
/// the stored derivatives when present and three-point estimates otherwise.
/// Below the first node the first value is held constant (regular centre);
/// beyond the last node the declared tail `r^tail_exponent` is used. A
/// profile whose last sample is exactly zero and that declares no tail is
/// treated as compactly supported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    derivatives: Option<Vec<f64>>,
}

impl SampledProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        let p = Self { radii, values, tail_exponent, derivatives: None };
        p.validate()?;
        Ok(p)
    }

    /// Profile with exact node derivatives for the Hermite interpolant.
    pub fn with_derivatives(
        radii: Vec<f64>,
        values: Vec<f64>,
        derivatives: Vec<f64>,
        tail_exponent: Option<f64>,
    ) -> Result<Self> {
        let p = Self { radii, values, tail_exponent, derivatives: Some(derivatives) };
        p.validate()?;
        Ok(p)
    }

    /// Profile whose values may be negative, for intermediate quantities
    /// such as Laplacian levels. [`interpolate`](Self::interpolate) keeps the
    /// sign; the [`RadialProfile`] view still clamps at zero.
    pub fn signed(
        radii: Vec<f64>,
        values: Vec<f64>,
        derivatives: Option<Vec<f64>>,
        tail_exponent: Option<f64>,
    ) -> Result<Self> {
        let shifted: Vec<f64> = values.iter().map(|v| if v.is_finite() { v.abs() } else { *v }).collect();
        Self { radii: radii.clone(), values: shifted, tail_exponent, derivatives: derivatives.clone() }.validate()?;
        Ok(Self { radii, values, tail_exponent, derivatives })
    }

    /// Samples `profile` on `radii`.
    pub fn sample(profile: &impl RadialProfile, radii: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        let values = radii.iter().map(|&r| profile.value(r)).collect();
        Self::new(radii, values, tail_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.len() < 2 {
            return Err(invalid("a sampled profile needs at least two nodes"));
        }
        if self.radii.len() != self.values.len() {
            return Err(invalid(format!(
                "radii ({}) and values ({}) differ in length",
                self.radii.len(),
                self.values.len()
            )));
        }
        if !(self.radii[0] > 0.0) {
            return Err(invalid("first radius must be positive"));
        }
        if let Some(i) = self.radii.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(invalid(format!("radii not strictly increasing at index {}", i + 1)));
        }
        if let Some((i, v)) = self.values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!("value {v} at index {i} must be finite and non-negative")));
        }
        if let Some(d) = &self.derivatives {
            if d.len() != self.radii.len() || d.iter().any(|x| !x.is_finite()) {
                return Err(invalid("derivatives must be finite and match the grid"));
            }
        }
        if let Some(e) = self.tail_exponent {
            if !e.is_finite() {
                return Err(invalid("tail exponent must be finite"));
            }
        }
        Ok(())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> Option<&[f64]> {
        self.derivatives.as_deref()
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().expect("validated non-empty")
    }

    fn slope(&self, i: usize) -> f64 {
        if let Some(d) = &self.derivatives {
            return d[i];
        }
        let (r, v) = (&self.radii, &self.values);
        let n = r.len();
        if n == 2 {
            return (v[1] - v[0]) / (r[1] - r[0]);
        }
        if i == 0 || i == n - 1 {
            // One-sided second-order estimate from the three end nodes.
            let (a, b, c) = if i == 0 { (0, 1, 2) } else { (n - 1, n - 2, n - 3) };
            let (h1, h2) = (r[b] - r[a], r[c] - r[a]);
            let (d1, d2) = ((v[b] - v[a]) / h1, (v[c] - v[a]) / h2);
            return (d1 * h2 - d2 * h1) / (h2 - h1);
        }
        // Three-point derivative on a non-uniform grid.
        let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        let (d0, d1) = ((v[i] - v[i - 1]) / h0, (v[i + 1] - v[i]) / h1);
        (h1 * d0 + h0 * d1) / (h0 + h1)
    }

    /// Interpolated value; see the type-level docs for the extension rules.
    pub fn interpolate(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        let last = self.radii[n - 1];
        if r >= last {
            if r == last {
                return self.values[n - 1];
            }
            return match self.tail_exponent {
                Some(e) => self.values[n - 1] * (r / last).powf(e),
                None if self.values[n - 1] == 0.0 => 0.0,
                None => f64::NAN,
            };
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i] + h10 * h * self.slope(i) + h01 * self.values[i + 1] + h11 * h * self.slope(i + 1)
    }

    pub fn from_json_reader(reader: impl Read) -> Result<Self> {
        let p: Self = serde_json::from_reader(reader)?;
        p.validate()?;
        Ok(p)
    }

    /// Reads a two-column `radius,value` CSV with a header row.
    pub fn from_csv_reader(reader: impl Read, tail_exponent: Option<f64>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(invalid(format!("row {}: expected 2 columns, found {}", line + 2, rec.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("row {}: {e}", line + 2)))
            };
            radii.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Self::new(radii, values, tail_exponent)
    }

    pub fn read_csv(path: impl AsRef<Path>, tail_exponent: Option<f64>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, tail_exponent)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["radius", "value"])?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            w.write_record([format!("{r:e}"), format!("{v:e}")])?;
        }
        w.flush().map_err(Error::from)
    }
}

impl RadialProfile for SampledProfile {
    fn value(&self, r: f64) -> f64 {
        self.interpolate(r).max(0.0)
    }

    fn features(&self) -> Vec<f64> {
        // Decade marks across the sampled range.
        let (lo, hi) = (self.r_min().log10().floor() as i32, self.r_max().log10().ceil() as i32);
        (lo..=hi).map(|k| 10f64.powi(k)).collect()
    }

    fn tail(&self) -> Tail {
        let (rl, vl) = (self.r_max(), self.values[self.values.len() - 1]);
        match self.tail_exponent {
            Some(exponent) => Tail::Power { exponent, coeff: vl * rl.powf(-exponent) },
            None if vl == 0.0 => {
                let last_nonzero = self.values.iter().rposition(|v| *v != 0.0);
                Tail::Compact { radius: last_nonzero.map_or(0.0, |i| self.radii[(i + 1).min(self.len() - 1)]) }
            }
            None => Tail::Unknown,
        }
    }
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    assert!(n >= 1);
    let mut area = if n % 2 == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        area *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    area
}
