//! Convolution kernels `Ψ`: positive, non-increasing, locally integrable
//! against `r^{N-1}` near the origin, with `r^N Ψ(r) → ∞`.
//!
//! Besides pointwise evaluation each kernel exposes its tail law
//! `Ψ(r) ~ C r^e (ln r)^ℓ` at infinity, which decides the two Liouville
//! tail conditions symbolically, and a change of variables near the origin
//! under which `Ψ(d) d^{N-1} dd` becomes a bounded measure.
//!
//! The log kernel `Ψ(r) = r^{-N} ln^{-β}(1 + 1/r)` behaves like
//! `r^{β-N}` at infinity (no logarithmic factor survives there), so its
//! tail integral `∫_{|y|>1} |y|^{-p(N-2m)} Ψ(|y|) dy` diverges exactly when
//! `p(N-2m) ≤ β`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::log_log_fit;
use crate::profile::SampledProfile;
use crate::quadrature::{gk15, integrate, Tolerance};

/// Exponents of the tail `Ψ(r) ~ C r^exponent (ln r)^log_power`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub exponent: f64,
    pub log_power: f64,
}

/// Three-valued outcome of a condition test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Holds,
    Fails,
    Inconclusive,
}

impl Decision {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Decision::Holds
        } else {
            Decision::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Decision::Holds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Kernel {
    /// `Ψ(r) = r^{-α}`.
    #[serde(rename = "riesz")]
    RieszPower { alpha: f64 },
    /// `Ψ(r) = r^{-N} ln^{-β}(1 + 1/r)`.
    #[serde(rename = "log")]
    LogBorderline { beta: f64 },
    /// Log-log interpolated samples with a declared tail law beyond the last
    /// sample: `Ψ(r_L) (r/r_L)^e (ln r / ln r_L)^ℓ`.
    #[serde(rename = "tabulated")]
    Tabulated {
        profile: SampledProfile,
        tail_exponent: f64,
        #[serde(default)]
        tail_log_power: f64,
    },
}

/// Tolerance on a symbolic exponent before it counts as exactly critical.
const EXPONENT_EPS: f64 = 1e-10;

/// Maximum disagreement between the declared tail slope of a tabulated
/// kernel and the slope of its top-decade samples.
const TAIL_SLOPE_TOL: f64 = 0.05;

impl Kernel {
    pub fn riesz(alpha: f64) -> Self {
        Kernel::RieszPower { alpha }
    }

    pub fn log(beta: f64) -> Self {
        Kernel::LogBorderline { beta }
    }

    pub fn tabulated(profile: SampledProfile, tail_exponent: f64, tail_log_power: f64) -> Result<Self> {
        let k = Kernel::Tabulated { profile, tail_exponent, tail_log_power };
        k.validate_samples()?;
        Ok(k)
    }

    /// Samples `Ψ` of another kernel on `radii` and declares its tail law.
    pub fn tabulate(source: &Kernel, n: u32, radii: Vec<f64>) -> Result<Self> {
        source.validate(n)?;
        let values = radii.iter().map(|&r| source.value(n, r)).collect();
        let law = source.tail_law(n);
        Self::tabulated(SampledProfile::new(radii, values, Some(law.exponent))?, law.exponent, law.log_power)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::RieszPower { .. } => "riesz",
            Kernel::LogBorderline { .. } => "log",
            Kernel::Tabulated { .. } => "tabulated",
        }
    }

    fn validate_samples(&self) -> Result<()> {
        if let Kernel::Tabulated { profile, tail_exponent, tail_log_power } = self {
            profile.validate()?;
            if let Some(i) = profile.values().iter().position(|v| !(*v > 0.0)) {
                return Err(invalid(format!("tabulated kernel sample {i} is not strictly positive")));
            }
            if let Some(i) = profile.values().windows(2).position(|w| w[1] > w[0]) {
                return Err(invalid(format!("tabulated kernel increases between samples {i} and {}", i + 1)));
            }
            if !tail_exponent.is_finite() || !tail_log_power.is_finite() {
                return Err(invalid("tabulated tail law must be finite"));
            }
            if *tail_log_power != 0.0 && !(profile.r_max() > 1.0) {
                return Err(invalid("a logarithmic tail needs the last sample beyond r = 1"));
            }
            if *tail_exponent > 0.0 || (*tail_exponent == 0.0 && *tail_log_power > 0.0) {
                return Err(invalid("tabulated tail law must be non-increasing"));
            }
        }
        Ok(())
    }

    /// Parameter constraints of the variant in dimension `n`.
    pub fn validate(&self, n: u32) -> Result<()> {
        if n == 0 {
            return Err(invalid("dimension N must be at least 1"));
        }
        let nf = n as f64;
        match *self {
            Kernel::RieszPower { alpha } => {
                if !(alpha > 0.0 && alpha < nf) {
                    return Err(Error::Domain(format!("Riesz exponent α = {alpha} must satisfy 0 < α < N = {n}")));
                }
            }
            Kernel::LogBorderline { beta } => {
                if !(beta > 1.0 && beta <= nf) {
                    return Err(Error::Domain(format!("log kernel exponent β = {beta} must satisfy 1 < β ≤ N = {n}")));
                }
            }
            Kernel::Tabulated { .. } => {
                self.validate_samples()?;
                let e = self.below_grid_exponent();
                if !(nf + e > 0.0) {
                    return Err(Error::Domain(format!(
                        "tabulated kernel behaves like r^{e:.4} near the origin, not locally integrable in N = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checked pointwise evaluation.
    pub fn eval(&self, n: u32, r: f64) -> Result<f64> {
        self.validate(n)?;
        if !(r > 0.0) {
            return Err(Error::Domain(format!("kernel evaluated at r = {r}")));
        }
        Ok(self.value(n, r))
    }

    /// Unchecked pointwise evaluation; `self` must be valid for `n`.
    pub fn value(&self, n: u32, r: f64) -> f64 {
        match self {
            Kernel::RieszPower { alpha } => r.powf(-alpha),
            Kernel::LogBorderline { beta } => {
                let l = (1.0 / r).ln_1p();
                (-(n as f64) * r.ln() - beta * l.ln()).exp()
            }
            Kernel::Tabulated { profile, tail_exponent, tail_log_power } => {
                tabulated_value(profile, *tail_exponent, *tail_log_power, r)
            }
        }
    }

    /// `r^N Ψ(r)`, evaluated without overflow for tiny `r`.
    pub fn weighted(&self, n: u32, r: f64) -> f64 {
        let nf = n as f64;
        match self {
            Kernel::RieszPower { alpha } => r.powf(nf - alpha),
            Kernel::LogBorderline { beta } => (1.0 / r).ln_1p().powf(-beta),
            Kernel::Tabulated { profile, .. } => {
                if r < profile.r_min() {
                    let (c, e) = self.below_grid_law();
                    (c.ln() + (nf + e) * r.ln()).exp()
                } else {
                    (nf * r.ln()).exp() * self.value(n, r)
                }
            }
        }
    }

    /// Tail law at infinity.
    pub fn tail_law(&self, n: u32) -> TailLaw {
        match *self {
            Kernel::RieszPower { alpha } => TailLaw { exponent: -alpha, log_power: 0.0 },
            Kernel::LogBorderline { beta } => TailLaw { exponent: beta - n as f64, log_power: 0.0 },
            Kernel::Tabulated { tail_exponent, tail_log_power, .. } => {
                TailLaw { exponent: tail_exponent, log_power: tail_log_power }
            }
        }
    }

    /// Radii where the kernel changes character; used as quadrature breakpoints.
    pub fn features(&self) -> Vec<f64> {
        match self {
            Kernel::RieszPower { .. } => Vec::new(),
            Kernel::LogBorderline { .. } => vec![1.0],
            Kernel::Tabulated { profile, .. } => {
                let (lo, hi) = (profile.r_min().log10().floor() as i32, profile.r_max().log10().ceil() as i32);
                let mut f: Vec<f64> = (lo..=hi).map(|k| 10f64.powi(k)).collect();
                f.push(profile.r_min());
                f.push(profile.r_max());
                f
            }
        }
    }

    /// `(c, e)` with `Ψ(r) = c r^e` below the first tabulated sample.
    fn below_grid_law(&self) -> (f64, f64) {
        match self {
            Kernel::Tabulated { profile, .. } => {
                let (r, v) = (profile.radii(), profile.values());
                let e = (v[1] / v[0]).ln() / (r[1] / r[0]).ln();
                (v[0] * r[0].powf(-e), e)
            }
            _ => (f64::NAN, f64::NAN),
        }
    }

    fn below_grid_exponent(&self) -> f64 {
        self.below_grid_law().1
    }

    /// Largest `d` for which [`Kernel::origin_inverse`] is exact.
    pub fn origin_limit(&self) -> f64 {
        match self {
            Kernel::Tabulated { profile, .. } => profile.r_min(),
            _ => f64::INFINITY,
        }
    }

    /// Coordinate `w(d)` with `Ψ(d) d^{N-1} dd = J(d) dw` and `w(0) = 0`.
    pub fn origin_coordinate(&self, n: u32, d: f64) -> f64 {
        let nf = n as f64;
        match *self {
            Kernel::RieszPower { alpha } => d.powf(nf - alpha) / (nf - alpha),
            Kernel::LogBorderline { beta } => (1.0 / d).ln_1p().powf(1.0 - beta) / (beta - 1.0),
            Kernel::Tabulated { .. } => {
                let (c, e) = self.below_grid_law();
                c * d.powf(nf + e) / (nf + e)
            }
        }
    }

    /// Inverse of [`Kernel::origin_coordinate`]: returns `(d, J)`.
    pub fn origin_inverse(&self, n: u32, w: f64) -> (f64, f64) {
        let nf = n as f64;
        if w <= 0.0 {
            return (0.0, 1.0);
        }
        match *self {
            Kernel::RieszPower { alpha } => (((nf - alpha) * w).powf(1.0 / (nf - alpha)), 1.0),
            Kernel::LogBorderline { beta } => {
                let l = ((beta - 1.0) * w).powf(-1.0 / (beta - 1.0));
                let d = 1.0 / l.exp_m1();
                (d, 1.0 + d)
            }
            Kernel::Tabulated { .. } => {
                let (c, e) = self.below_grid_law();
                let g = nf + e;
                ((g * w / c).powf(1.0 / g), 1.0)
            }
        }
    }

    /// `∫_0^R Ψ(r) r^{N-1} dr`.
    pub fn radial_mass(&self, n: u32, radius: f64) -> Result<f64> {
        self.validate(n)?;
        if !(radius > 0.0) {
            return Ok(0.0);
        }
        let nf = n as f64;
        let tol = Tolerance::relative(1e-12);
        match *self {
            Kernel::RieszPower { alpha } => Ok(radius.powf(nf - alpha) / (nf - alpha)),
            Kernel::LogBorderline { .. } => {
                let wr = self.origin_coordinate(n, radius);
                let est = integrate(|w| self.origin_inverse(n, w).1, &[0.0, wr], tol, 200);
                Ok(est.value)
            }
            Kernel::Tabulated { ref profile, .. } => {
                let r0 = profile.r_min();
                let head = self.origin_coordinate(n, radius.min(r0));
                if radius <= r0 {
                    return Ok(head);
                }
                let mut pts: Vec<f64> = profile.radii().iter().copied().filter(|&r| r > r0 && r < radius).collect();
                pts.insert(0, r0);
                pts.push(radius);
                let est = integrate(|r| self.value(n, r) * r.powf(nf - 1.0), &pts, tol, 4 * pts.len() + 100);
                Ok(head + est.value)
            }
        }
    }

    /// Whether the sampled tail of a tabulated kernel agrees with its
    /// declared law; always true for the analytic variants.
    fn tail_consistent(&self) -> bool {
        let Kernel::Tabulated { profile, tail_exponent, tail_log_power } = self else {
            return true;
        };
        let r_last = profile.r_max();
        let mut idx: Vec<usize> = (0..profile.len()).filter(|&i| profile.radii()[i] >= r_last / 10.0).collect();
        if idx.len() < 3 {
            let n = profile.len();
            idx = (n.saturating_sub(3)..n).collect();
        }
        let xs: Vec<f64> = idx.iter().map(|&i| profile.radii()[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| profile.values()[i]).collect();
        let Ok(fit) = log_log_fit(&xs, &ys) else {
            return false;
        };
        let mid = (xs[0] * xs[xs.len() - 1]).sqrt();
        let expected = tail_exponent + if *tail_log_power != 0.0 { tail_log_power / mid.ln() } else { 0.0 };
        (fit.slope - expected).abs() <= TAIL_SLOPE_TOL
    }
}

fn tabulated_value(profile: &SampledProfile, tail_exponent: f64, tail_log_power: f64, r: f64) -> f64 {
    let (radii, values) = (profile.radii(), profile.values());
    let n = radii.len();
    if r <= radii[0] {
        let e = (values[1] / values[0]).ln() / (radii[1] / radii[0]).ln();
        return values[0] * (r / radii[0]).powf(e);
    }
    let last = radii[n - 1];
    if r >= last {
        let mut v = values[n - 1] * (r / last).powf(tail_exponent);
        if tail_log_power != 0.0 {
            v *= (r.ln() / last.ln()).powf(tail_log_power);
        }
        return v;
    }
    let i = radii.partition_point(|&x| x <= r) - 1;
    let t = (r / radii[i]).ln() / (radii[i + 1] / radii[i]).ln();
    (values[i].ln() * (1.0 - t) + values[i + 1].ln() * t).exp()
}

/// Whether `limsup_{r→∞} r^{2N-(N-2m)τ} Ψ(r) > 0`.
pub fn tail_condition_ii2(k: &Kernel, n: u32, m: u32, tau: f64) -> Decision {
    if k.validate(n).is_err() || n <= 2 * m || !(tau > 0.0) {
        return Decision::Inconclusive;
    }
    let law = k.tail_law(n);
    let e = 2.0 * n as f64 - (n - 2 * m) as f64 * tau + law.exponent;
    let holds = if e.abs() <= EXPONENT_EPS { law.log_power >= 0.0 } else { e > 0.0 };
    if !k.tail_consistent() {
        return Decision::Inconclusive;
    }
    Decision::from_bool(holds)
}

/// Whether `∫_{|y|>1} |y|^{-p(N-2m)} Ψ(|y|) dy = ∞`.
pub fn integral_condition_ii1(k: &Kernel, n: u32, m: u32, p: f64) -> Decision {
    if k.validate(n).is_err() || n <= 2 * m || !(p > 0.0) {
        return Decision::Inconclusive;
    }
    let law = k.tail_law(n);
    // Radial integrand r^{N-1-p(N-2m)+e} (ln r)^ℓ.
    let d = n as f64 - p * (n - 2 * m) as f64 + law.exponent;
    let holds = if d.abs() <= EXPONENT_EPS { law.log_power >= -1.0 } else { d > 0.0 };
    if !k.tail_consistent() {
        return Decision::Inconclusive;
    }
    Decision::from_bool(holds)
}

/// Outcome of [`check_admissible`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub parameters_valid: bool,
    pub positive: bool,
    pub non_increasing: bool,
    pub weighted_growth: bool,
    pub locally_integrable: bool,
    /// `∫_0^1 Ψ(r) r^{N-1} dr` when it converged.
    pub origin_mass: Option<f64>,
    pub failures: Vec<String>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks positivity, monotonicity, growth of `r^N Ψ` and local
/// integrability of `k` on `grid`.
pub fn check_admissible(k: &Kernel, n: u32, grid: &[f64]) -> AdmissibilityReport {
    let mut failures = Vec::new();
    let parameters_valid = match k.validate(n) {
        Ok(()) => true,
        Err(e) => {
            failures.push(e.to_string());
            false
        }
    };
    let mut report = AdmissibilityReport {
        parameters_valid,
        positive: false,
        non_increasing: false,
        weighted_growth: false,
        locally_integrable: false,
        origin_mass: None,
        failures,
    };
    if !parameters_valid {
        return report;
    }
    let grid_ok = grid.len() >= 2
        && grid[0] > 0.0
        && grid.windows(2).all(|w| w[1] > w[0])
        && grid[grid.len() - 1] / grid[0] >= 1e4 * (1.0 - 1e-12);
    if !grid_ok {
        report.failures.push("grid must be increasing, positive and span at least four decades".into());
        return report;
    }

    let values: Vec<f64> = grid.iter().map(|&r| k.value(n, r)).collect();
    report.positive = values.iter().all(|v| *v > 0.0 && v.is_finite());
    if !report.positive {
        report.failures.push("kernel is not strictly positive on the grid".into());
    }
    report.non_increasing = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    if !report.non_increasing {
        report.failures.push("kernel increases somewhere on the grid".into());
    }

    let top = grid[grid.len() - 1];
    let upper: Vec<f64> = grid.iter().copied().filter(|&r| r >= top / 100.0).collect();
    let weighted: Vec<f64> = upper.iter().map(|&r| k.weighted(n, r)).collect();
    let increasing = weighted.windows(2).all(|w| w[1] >= w[0]);
    let growing = weighted.len() >= 2 && weighted[weighted.len() - 1] > weighted[0] * (1.0 + 1e-6);
    report.weighted_growth = increasing && growing;
    if !report.weighted_growth {
        report.failures.push("r^N Ψ(r) is not increasing over the top two decades".into());
    }

    match origin_mass_numeric(k, n) {
        Some(mass) => {
            report.locally_integrable = true;
            report.origin_mass = Some(mass);
        }
        None => report.failures.push("∫_0^1 Ψ(r) r^{N-1} dr appears to diverge".into()),
    }
    report
}

/// `∫_0^1 Ψ(r) r^{N-1} dr` summed decade by decade in `ln r` down to
/// `1e-300`; `None` when the decade increments do not decay fast enough.
fn origin_mass_numeric(k: &Kernel, n: u32) -> Option<f64> {
    const DECADES: usize = 300;
    let ln10 = std::f64::consts::LN_10;
    let mut increments = Vec::with_capacity(DECADES);
    for j in 0..DECADES {
        let (t1, t0) = (-(j as f64) * ln10, -((j + 1) as f64) * ln10);
        let mut f = |t: f64| k.weighted(n, t.exp());
        let (mut v, _) = gk15(&mut f, t0, t1);
        let (h, _) = gk15(&mut f, t0, 0.5 * (t0 + t1));
        let (h2, _) = gk15(&mut f, 0.5 * (t0 + t1), t1);
        if (h + h2 - v).abs() > 1e-10 * v.abs() {
            v = h + h2;
        }
        if !v.is_finite() {
            return None;
        }
        increments.push(v);
    }
    let total: f64 = increments.iter().sum();
    let last = &increments[DECADES - 100..];
    if last[last.len() - 1] <= total * 1e-15 {
        return Some(total);
    }
    // Geometric decay of the increments.
    let ratio = (last[last.len() - 1] / last[0]).powf(1.0 / (last.len() - 1) as f64);
    // Power-law decay I_j ~ j^{-γ}.
    let ks: Vec<f64> = (DECADES - 100..DECADES).map(|j| (j + 1) as f64).collect();
    let gamma = log_log_fit(&ks, last).map(|f| -f.slope).unwrap_or(0.0);
    if ratio < 0.999 || gamma > 1.02 {
        Some(total)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::log_grid;

    #[test]
    fn eval_examples() {
        assert_eq!(Kernel::riesz(2.0).eval(3, 2.0).unwrap(), 0.25);
        let v = Kernel::log(2.0).eval(3, 1.0).unwrap();
        assert!((v - 2f64.ln().powi(-2)).abs() < 1e-14);
        assert!((v - 2.0814).abs() < 1e-4);
        let radii = log_grid(0.1, 100.0, 31).unwrap();
        let t = Kernel::tabulate(&Kernel::riesz(1.0), 3, radii).unwrap();
        assert!((t.eval(3, 4.0).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn parameter_domains() {
        assert!(Kernel::riesz(3.0).validate(3).is_err());
        assert!(Kernel::riesz(0.0).validate(3).is_err());
        assert!(Kernel::log(1.0).validate(3).is_err());
        assert!(Kernel::log(3.0).validate(3).is_ok());
        assert!(Kernel::log(3.5).validate(3).is_err());
    }

    #[test]
    fn json_tagging() {
        let k: Kernel = serde_json::from_str(r#"{"variant":"riesz","alpha":2.0}"#).unwrap();
        assert_eq!(k, Kernel::riesz(2.0));
        let s = serde_json::to_string(&Kernel::log(2.0)).unwrap();
        assert_eq!(s, r#"{"variant":"log","beta":2.0}"#);
    }

    #[test]
    fn admissibility_examples() {
        let grid = log_grid(1e-3, 1e3, 61).unwrap();
        let r = check_admissible(&Kernel::riesz(2.0), 3, &grid);
        assert!(r.admissible(), "{:?}", r.failures);
        assert!((r.origin_mass.unwrap() - 1.0).abs() < 1e-9);
        assert!(!check_admissible(&Kernel::riesz(3.0), 3, &grid).admissible());
        let l = check_admissible(&Kernel::log(2.0), 3, &grid);
        assert!(l.admissible(), "{:?}", l.failures);
        // ∫_0^1 r^{-1} ln^{-2}(1+1/r) dr = ∫ (1+d) dW with W = 1/L.
        let exact = Kernel::log(2.0).radial_mass(3, 1.0).unwrap();
        assert!((l.origin_mass.unwrap() - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn short_grid_is_reported() {
        let grid = log_grid(1.0, 100.0, 5).unwrap();
        assert!(!check_admissible(&Kernel::riesz(1.0), 3, &grid).admissible());
    }

    #[test]
    fn condition_examples() {
        let k = Kernel::riesz(2.0);
        assert_eq!(tail_condition_ii2(&k, 5, 1, 8.0 / 3.0), Decision::Holds);
        assert_eq!(tail_condition_ii2(&k, 5, 1, 4.0), Decision::Fails);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 1.0), Decision::Holds);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 2.0), Decision::Fails);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 1e9), Decision::Fails);
    }

    #[test]
    fn log_kernel_integral_criterion() {
        // Diverges iff p(N-2m) ≤ β.
        let k = Kernel::log(2.0);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 2.0 / 3.0), Decision::Holds);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 0.6), Decision::Holds);
        assert_eq!(integral_condition_ii1(&k, 5, 1, 0.7), Decision::Fails);
    }

    #[test]
    fn tabulated_fast_decay_fails_ii2() {
        let radii = log_grid(1e-2, 1e4, 61).unwrap();
        let values: Vec<f64> = radii.iter().map(|r| r.powi(-6).min(1.0)).collect();
        let k = Kernel::tabulated(SampledProfile::new(radii, values, Some(-6.0)).unwrap(), -6.0, 0.0).unwrap();
        assert_eq!(tail_condition_ii2(&k, 3, 1, 2.0), Decision::Fails);
    }

    #[test]
    fn inconsistent_tail_is_inconclusive() {
        let radii = log_grid(1e-2, 1e4, 61).unwrap();
        let values: Vec<f64> = radii.iter().map(|r| r.powi(-2)).collect();
        let k = Kernel::tabulated(SampledProfile::new(radii, values, None).unwrap(), -1.0, 0.0).unwrap();
        assert_eq!(tail_condition_ii2(&k, 5, 1, 2.0), Decision::Inconclusive);
    }

    #[test]
    fn origin_maps_invert() {
        for k in [Kernel::riesz(1.3), Kernel::log(2.5)] {
            for d in [1e-8, 1e-3, 0.5, 2.0] {
                let w = k.origin_coordinate(3, d);
                let (back, jac) = k.origin_inverse(3, w);
                assert!((back - d).abs() < 1e-9 * d, "{k:?} {d} {back}");
                // J dw/dd should equal Ψ(d) d^{N-1}.
                let h = 1e-6 * d;
                let dw = (k.origin_coordinate(3, d + h) - k.origin_coordinate(3, d - h)) / (2.0 * h);
                let lhs = jac * dw;
                let rhs = k.value(3, d) * d * d;
                assert!((lhs - rhs).abs() < 1e-6 * rhs, "{k:?} {d}: {lhs} vs {rhs}");
            }
        }
    }
}
