//! Explicit supersolutions for the Riesz-kernel problem
//!
//! ```text
//! (-Δ)^m U ≥ (|x|^{-α} * U^p) U^q   in R^N
//! ```
//!
//! inside the existence region. The ansatz is `v = (a + r²)^{-κ/2}` with
//! `(-Δ)^m v = F(a, ·)`. Far out `F` behaves like `b_m(a) r^{-κ-2m} > 0`;
//! near the origin it may be negative, which is repaired by adding
//! `M·W`, where `W` is the `m`-fold Newtonian potential of a smooth plateau
//! `φ` (so `(-Δ)^m W = φ` by construction). `V = v + M W` then satisfies
//! `(-Δ)^m V = F + Mφ > 0`, and `U = C^{1/(p+q-1)} V` for a small enough
//! constant `C` is a supersolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{in_existence_region, ProblemParams, Sign};
use crate::error::{invalid, Error, Result};
use crate::kernels::{Decision, Kernel};
use crate::profile::{log_grid, RadialProfile, SampledProfile, SmoothPlateau, Tail};
use crate::radial_expr::{b_coefficients, RadialExpr};
use crate::riesz::{convolve_radial, finiteness_check, newtonian_potential_chain, potential_grid};

/// Tunable parts of the construction. All defaults are deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderOptions {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// Radii for the potential chain; must reach well past `grid_max`.
    pub potential_grid: Vec<f64>,
    /// `C = safety · min(C1, C2)`; values below 1 leave slack between
    /// sampling radii.
    pub safety: f64,
}

impl Default for BuilderOptions {
    fn default() -> Self {
        Self { grid_min: 1e-2, grid_max: 1e4, grid_points: 200, potential_grid: potential_grid(), safety: 0.5 }
    }
}

impl BuilderOptions {
    pub fn grid(&self) -> Result<Vec<f64>> {
        log_grid(self.grid_min, self.grid_max, self.grid_points)
    }
}

fn riesz_alpha(params: &ProblemParams) -> Result<f64> {
    match params.kernel {
        Kernel::RieszPower { alpha } => Ok(alpha),
        _ => Err(invalid("the construction is available for the Riesz kernel only")),
    }
}

/// Midpoint of `(κ_min, N-2m)`, where `κ_min` is the largest of the lower
/// bounds `(N-α+2m)/(p+q-1)`, `(N-α)/p`, `(2m-α)/(q-1)` and 0.
pub fn choose_kappa(n: u32, m: u32, alpha: f64, p: f64, q: f64) -> Result<f64> {
    if n <= 2 * m {
        return Err(Error::Infeasible(format!("N = {n} must exceed 2m = {}", 2 * m)));
    }
    if !(p >= 1.0 && q > 1.0) {
        return Err(Error::Infeasible(format!("the construction needs p ≥ 1 and q > 1 (p = {p}, q = {q})")));
    }
    let nf = n as f64;
    let mf = m as f64;
    let bounds = [
        ("κ(p+q-1) > N-α+2m", (nf - alpha + 2.0 * mf) / (p + q - 1.0)),
        ("κp > N-α", (nf - alpha) / p),
        ("κ(q-1) > 2m-α", (2.0 * mf - alpha) / (q - 1.0)),
        ("κ > 0", 0.0),
    ];
    let (binding, kappa_min) = bounds.iter().fold(("κ > 0", 0.0), |acc, &(name, b)| if b > acc.1 { (name, b) } else { acc });
    let upper = nf - 2.0 * mf;
    if kappa_min >= upper {
        return Err(Error::Infeasible(format!(
            "{binding} forces κ ≥ {kappa_min}, but κ < N-2m = {upper} is required"
        )));
    }
    let mut kappa = 0.5 * (kappa_min + upper);
    if (p * kappa - nf).abs() <= 1e-12 * nf {
        kappa += 0.01 * (upper - kappa_min);
    }
    Ok(kappa)
}

/// Largest `a` in `1, 1/2, 1/4, …, 2^{-40}` with `b_m(a) > 0`.
pub fn choose_a(n: u32, m: u32, kappa: f64) -> Result<f64> {
    let mut a = 1.0;
    for _ in 0..=40 {
        let b = b_coefficients(n, m, kappa, a)?;
        if b[m as usize] > 0.0 {
            return Ok(a);
        }
        a *= 0.5;
    }
    Err(Error::ScanExhausted(format!("b_m(a) ≤ 0 for every a ≥ 2^-40 (N = {n}, m = {m}, κ = {kappa})")))
}

/// `c` and `R` with `F(a, r) ≥ c r^{-κ-2m}` for `r ≥ R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub c_lower: f64,
    pub radius: f64,
    /// `F(a,r) r^{κ+2m}` at the last scanned radius.
    pub ratio_at_end: f64,
    /// Derivative of that ratio at the last scanned radius.
    pub ratio_slope_at_end: f64,
}

const SCAN_END: f64 = 1e6;
const RADIUS_LIMIT: f64 = 1e4;

/// Scans `F(a, r) r^{κ+2m}` on a log grid over `[1, 1e6]` and returns the
/// smallest grid radius beyond which it stays above `c = b_m(a)/2`.
pub fn lower_bound_radius(n: u32, m: u32, kappa: f64, a: f64) -> Result<LowerBound> {
    let b = b_coefficients(n, m, kappa, a)?;
    let bm = b[m as usize];
    if !(bm > 0.0) {
        return Err(invalid(format!("b_m(a) = {bm} must be positive")));
    }
    let c_lower = 0.5 * bm;
    let s = 0.5 * kappa + 2.0 * m as f64;
    let e0 = kappa + 2.0 * m as f64;
    // ratio(r) = Σ_j b_j r^{2j+κ+2m} (a+r²)^{-s} = (r²/(a+r²))^s Σ_j b_j r^{2j-2m}.
    let ratio = |r: f64| -> f64 {
        let t = r * r / (a + r * r);
        b.iter().enumerate().map(|(j, bj)| bj * r.powi(2 * j as i32 - 2 * m as i32)).sum::<f64>() * t.powf(s)
    };
    let slope = |r: f64| -> f64 {
        b.iter()
            .enumerate()
            .map(|(j, bj)| {
                let e = 2.0 * j as f64 + e0;
                let u = a + r * r;
                bj * (e * r.powf(e - 1.0) * u.powf(-s) - 2.0 * s * r.powf(e + 1.0) * u.powf(-s - 1.0))
            })
            .sum()
    };
    let grid = log_grid(1.0, SCAN_END, 1201)?;
    let values: Vec<f64> = grid.iter().map(|&r| ratio(r)).collect();
    let mut first_good = None;
    for i in (0..grid.len()).rev() {
        if values[i] >= c_lower {
            first_good = Some(i);
        } else {
            break;
        }
    }
    let ratio_at_end = values[values.len() - 1];
    let ratio_slope_at_end = slope(SCAN_END);
    match first_good {
        Some(i) if grid[i] <= RADIUS_LIMIT => {
            Ok(LowerBound { c_lower, radius: grid[i], ratio_at_end, ratio_slope_at_end })
        }
        _ => {
            let sample: Vec<String> = grid.iter().zip(&values).step_by(200).map(|(r, v)| format!("{r:.3e}:{v:.4e}")).collect();
            Err(Error::NotFound(format!(
                "F(a,r) r^(κ+2m) does not stay above {c_lower:.4e} from any r ≤ {RADIUS_LIMIT}; profile {}",
                sample.join(", ")
            )))
        }
    }
}

/// Plateau `φ` and its potential chain `W_1..W_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub plateau: SmoothPlateau,
    pub chain: Vec<SampledProfile>,
}

impl Correction {
    /// `W_m`, with `(-Δ)^m W_m = φ`.
    pub fn top(&self) -> &SampledProfile {
        self.chain.last().expect("chain is non-empty")
    }
}

pub fn build_correction(n: u32, m: u32, radius: f64, grid: &[f64]) -> Result<Correction> {
    let plateau = SmoothPlateau::new(radius)?;
    let chain = newtonian_potential_chain(&plateau, n, m, grid)?;
    Ok(Correction { plateau, chain: chain.levels })
}

/// All constants of an assembled supersolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub params: ProblemParams,
    pub kappa: f64,
    pub a: f64,
    pub b: Vec<f64>,
    pub c_lower: f64,
    pub radius: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub c1: f64,
    pub c2: f64,
    pub safety: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub scale: f64,
    /// `v = (a + r²)^{-κ/2}`.
    pub v: RadialExpr,
    /// `F = (-Δ)^m v`.
    pub f: RadialExpr,
    pub correction: Correction,
    /// Radii on which `C1` and `C2` were sampled.
    pub grid: Vec<f64>,
}

/// `U = scale · (v + M W_m)`.
#[derive(Clone, Copy, Debug)]
pub struct UProfile<'a> {
    cons: &'a Construction,
    scale: f64,
}

impl RadialProfile for UProfile<'_> {
    fn value(&self, r: f64) -> f64 {
        let c = self.cons;
        self.scale * (c.v.value(r) + c.big_m * c.correction.top().interpolate(r))
    }

    fn features(&self) -> Vec<f64> {
        let c = self.cons;
        let mut f = c.v.features();
        f.extend(c.correction.plateau.features());
        f
    }

    fn tail(&self) -> Tail {
        // κ < N - 2m, so v dominates W_m ~ r^{2m-N}.
        Tail::Power { exponent: -self.cons.kappa, coeff: self.scale * self.cons.v.tail_coefficient() }
    }
}

impl Construction {
    /// The supersolution `U`.
    pub fn u(&self) -> UProfile<'_> {
        UProfile { cons: self, scale: self.scale }
    }

    /// `V = v + M W_m`.
    pub fn v_profile(&self) -> UProfile<'_> {
        UProfile { cons: self, scale: 1.0 }
    }

    /// `(-Δ)^m V = F + M φ`, exact.
    pub fn lhs_v(&self, r: f64) -> f64 {
        self.f.value(r) + self.big_m * self.correction.plateau.eval(r)
    }

    /// `(-Δ)^m U`.
    pub fn lhs(&self, r: f64) -> f64 {
        self.scale * self.lhs_v(r)
    }

    /// `U` sampled on `radii` with its declared tail.
    pub fn u_samples(&self, radii: &[f64]) -> Result<SampledProfile> {
        SampledProfile::sample(&self.u(), radii.to_vec(), Some(-self.kappa))
    }

    /// A copy with `scale` multiplied by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self { scale: self.scale * lambda, ..self.clone() }
    }
}

/// Fixes `M`, samples `C1`, `C2` and scales `V` into `U`.
pub fn assemble_and_scale(
    params: &ProblemParams,
    kappa: f64,
    a: f64,
    bound: &LowerBound,
    correction: Correction,
    opts: &BuilderOptions,
) -> Result<Construction> {
    let alpha = riesz_alpha(params)?;
    let (n, m, p, q) = (params.n, params.m, params.p, params.q);
    let v = RadialExpr::shifted(1.0, a, 0.5 * kappa)?;
    let f = v.neg_laplacian_power(n, m);
    let b = b_coefficients(n, m, kappa, a)?;
    let radius = bound.radius;

    let inner = log_grid(radius * 1e-6, radius, 2000)?;
    let f_min = inner.iter().map(|&r| f.value(r)).chain(std::iter::once(f.eval(0.0)?)).fold(f64::INFINITY, f64::min);
    let big_m = 1f64.max(2.0 * (-f_min).max(0.0));

    let grid = opts.grid()?;
    let mut cons = Construction {
        params: params.clone(),
        kappa,
        a,
        b,
        c_lower: bound.c_lower,
        radius,
        big_m,
        c1: f64::NAN,
        c2: f64::NAN,
        safety: opts.safety,
        c: f64::NAN,
        scale: 1.0,
        v,
        f,
        correction,
        grid: grid.clone(),
    };
    let kernel = Kernel::riesz(alpha);
    let vp = cons.v_profile();
    let fin = finiteness_check(&vp, &kernel, p, n, None)?;
    if fin.decision != Decision::Holds {
        return Err(Error::NonIntegrable(format!("V^p is not integrable against the kernel: {fin:?}")));
    }
    let ratios: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&r| {
            let conv = convolve_radial(&kernel, &vp, p, n, r)?;
            let rhs = conv * vp.value(r).powf(q);
            Ok((r, cons.lhs_v(r) / rhs))
        })
        .collect::<Result<_>>()?;
    if let Some((r, x)) = ratios.iter().find(|(_, x)| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::Positivity(format!("ratio (-Δ)^m V / RHS = {x:e} at r = {r:e}")));
    }
    let min_over = |pred: &dyn Fn(f64) -> bool| {
        ratios.iter().filter(|(r, _)| pred(*r)).map(|(_, x)| *x).fold(f64::INFINITY, f64::min)
    };
    let c1 = min_over(&|r| r >= radius);
    let c2 = min_over(&|r| r < radius);
    let c = opts.safety * c1.min(c2);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Positivity(format!("sampled constants C1 = {c1:e}, C2 = {c2:e}")));
    }
    cons.c1 = c1;
    cons.c2 = c2;
    cons.c = c;
    cons.scale = c.powf(1.0 / (p + q - 1.0));
    Ok(cons)
}

/// Full pipeline for a Riesz problem inside the existence region.
pub fn construct(params: &ProblemParams, opts: &BuilderOptions) -> Result<Construction> {
    params.validate()?;
    let alpha = riesz_alpha(params)?;
    if params.sign != Sign::Plus {
        return Err(Error::Infeasible("a supersolution is constructed for the plus sign only".into()));
    }
    let (n, m, p, q) = (params.n, params.m, params.p, params.q);
    if !(opts.safety > 0.0 && opts.safety <= 1.0) {
        return Err(invalid(format!("safety factor {} must lie in (0, 1]", opts.safety)));
    }
    let kappa = choose_kappa(n, m, alpha, p, q)?;
    if !in_existence_region(n, m, alpha, p, q) {
        return Err(Error::Infeasible(format!("(p, q) = ({p}, {q}) lies outside the existence region")));
    }
    let a = choose_a(n, m, kappa)?;
    let bound = lower_bound_radius(n, m, kappa, a)?;
    let pg = &opts.potential_grid;
    if pg.is_empty() || pg[pg.len() - 1] < 10.0 * opts.grid_max || pg[pg.len() - 1] < 4.0 * bound.radius {
        return Err(invalid("potential grid must extend at least a decade past the sampling grid"));
    }
    let correction = build_correction(n, m, bound.radius, pg)?;
    assemble_and_scale(params, kappa, a, &bound, correction, opts)
}

/// Pointwise check of `(-Δ)^m U ≥ (Ψ * U^p) U^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub pass: bool,
    pub tol: f64,
    /// Smallest `margin / (1 + |(-Δ)^m U|)` over the grid.
    pub min_normalized_margin: f64,
    pub argmin_radius: f64,
    /// Stored data that disagrees with what it is derived from.
    pub inconsistencies: Vec<String>,
    pub samples: Vec<MarginSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Differences between the stored derived data of `cons` and a fresh
/// derivation: `F` from `v`, and the potential chain from the plateau.
fn consistency_issues(cons: &Construction) -> Result<Vec<String>> {
    let (n, m) = (cons.params.n, cons.params.m);
    let mut issues = Vec::new();
    let f = cons.v.neg_laplacian_power(n, m);
    let probe = [1e-2, 0.5, 1.0, 3.0, 1e2, 1e4];
    if probe.iter().any(|&r| (f.value(r) - cons.f.value(r)).abs() > 1e-12 * (f.value(r).abs() + 1e-300)) {
        issues.push("stored F differs from (-Δ)^m v".to_string());
    }
    if cons.correction.chain.len() != m as usize {
        issues.push(format!("potential chain has {} levels, expected {m}", cons.correction.chain.len()));
        return Ok(issues);
    }
    let grid = cons.correction.top().radii().to_vec();
    let fresh = newtonian_potential_chain(&cons.correction.plateau, n, m, &grid)?;
    for (k, (a, b)) in fresh.levels.iter().zip(&cons.correction.chain).enumerate() {
        let bad = a.radii() != b.radii()
            || a.values().iter().zip(b.values()).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1e-300));
        if bad {
            issues.push(format!("stored potential W_{} differs from the potential of the plateau", k + 1));
        }
    }
    Ok(issues)
}

/// PASS iff `margin(r) ≥ -tol (1 + |(-Δ)^m U(r)|)` at every radius and the
/// stored derived data is consistent. The left side is recomputed from `v`
/// and the plateau rather than read from the stored `F`.
pub fn verify_supersolution(cons: &Construction, params: &ProblemParams, radii: &[f64], tol: f64) -> Result<Certification> {
    let alpha = riesz_alpha(params)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if radii.is_empty() {
        return Err(invalid("no radii to verify"));
    }
    if &cons.params != params {
        return Err(invalid("construction was built for different parameters"));
    }
    let inconsistencies = consistency_issues(cons)?;
    let kernel = Kernel::riesz(alpha);
    let u = cons.u();
    let (p, q, n) = (params.p, params.q, params.n);
    let f = cons.v.neg_laplacian_power(n, params.m);
    let samples: Vec<MarginSample> = radii
        .par_iter()
        .map(|&r| {
            let lhs = cons.scale * (f.value(r) + cons.big_m * cons.correction.plateau.eval(r));
            let conv = convolve_radial(&kernel, &u, p, n, r).map_err(|e| match e {
                Error::NonIntegrable(msg) => Error::NonIntegrable(format!("construction fault: {msg}")),
                other => other,
            })?;
            let uv = u.value(r);
            let rhs = if uv > 0.0 { conv * uv.powf(q) } else { 0.0 };
            Ok(MarginSample { r, lhs, rhs, margin: lhs - rhs })
        })
        .collect::<Result<_>>()?;
    let (argmin_radius, min_normalized_margin) = samples
        .iter()
        .map(|s| (s.r, s.margin / (1.0 + s.lhs.abs())))
        .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(Certification {
        pass: min_normalized_margin >= -tol && inconsistencies.is_empty(),
        tol,
        min_normalized_margin,
        argmin_radius,
        inconsistencies,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_expr::power_law_coefficient;

    #[test]
    fn kappa_examples() {
        assert!((choose_kappa(5, 1, 2.0, 2.0, 2.0).unwrap() - 7.0 / 3.0).abs() < 1e-14);
        assert!((choose_kappa(9, 2, 3.0, 3.0, 3.0).unwrap() - 3.5).abs() < 1e-14);
        assert!(matches!(choose_kappa(5, 1, 2.0, 1.0, 1.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn kappa_avoids_critical_product() {
        // p = 7/3: κ_min = 9/7, midpoint 15/7 and pκ = N exactly.
        let p = 7.0 / 3.0;
        let k = choose_kappa(5, 1, 2.0, p, 10.0).unwrap();
        assert!(k > 15.0 / 7.0 && k < 3.0);
        assert!((p * k - 5.0).abs() > 1e-3);
    }

    #[test]
    fn a_examples() {
        assert_eq!(choose_a(5, 1, 1.0).unwrap(), 1.0);
        let kappa = 2.0;
        let a = choose_a(9, 2, kappa).unwrap();
        assert!(b_coefficients(9, 2, kappa, a).unwrap()[2] > 0.0);
        assert!(a == 1.0 || b_coefficients(9, 2, kappa, 2.0 * a).unwrap()[2] <= 0.0);
        // Near the upper end of the κ interval b_m(0) is tiny but positive.
        assert!(choose_a(5, 1, 3.0 - 1e-9).is_ok());
    }

    #[test]
    fn lower_bound_pure_power() {
        let lb = lower_bound_radius(5, 1, 1.5, 0.0).unwrap();
        assert_eq!(lb.radius, 1.0);
        assert!((lb.c_lower - 0.5 * power_law_coefficient(5, 1, 1.5)).abs() < 1e-14);
    }

    #[test]
    fn lower_bound_grid_property() {
        let kappa = 3.5;
        let a = choose_a(9, 2, kappa).unwrap();
        let lb = lower_bound_radius(9, 2, kappa, a).unwrap();
        let v = RadialExpr::shifted(1.0, a, 0.5 * kappa).unwrap();
        let f = v.neg_laplacian_power(9, 2);
        for r in log_grid(lb.radius, 1e6, 300).unwrap() {
            assert!(f.value(r) * r.powf(kappa + 4.0) >= lb.c_lower * (1.0 - 1e-12), "r = {r}");
        }
    }

    #[test]
    fn verify_flags_tampering() {
        let params = ProblemParams::riesz(5, 1, Sign::Plus, 2.0, 2.0, 2.0);
        let opts = BuilderOptions { grid_points: 12, ..Default::default() };
        let cons = construct(&params, &opts).unwrap();
        let radii = opts.grid().unwrap();
        let ok = verify_supersolution(&cons, &params, &radii, 1e-8).unwrap();
        assert!(ok.pass && ok.inconsistencies.is_empty());
        assert!(!verify_supersolution(&cons.rescaled(10.0), &params, &radii, 1e-8).unwrap().pass);
        assert!(verify_supersolution(&cons.rescaled(0.5), &params, &radii, 1e-8).unwrap().pass);
        let mut bad = cons.clone();
        bad.f = bad.f.scaled(3.0);
        let rep = verify_supersolution(&bad, &params, &radii, 1e-8).unwrap();
        assert!(!rep.pass && rep.inconsistencies.len() == 1);
        let other = ProblemParams::riesz(5, 1, Sign::Plus, 2.0, 2.0, 2.5);
        assert!(verify_supersolution(&cons, &other, &radii, 1e-8).is_err());
    }

    #[test]
    fn correction_shape() {
        let c = build_correction(5, 1, 1.0, &potential_grid()).unwrap();
        assert_eq!(c.plateau.eval(0.0), 1.0);
        assert_eq!(c.plateau.eval(3.0), 0.0);
        let w = c.top();
        assert!(w.values().iter().all(|v| *v > 0.0));
        // Outside the plateau W = mass / ((N-2) r^{N-2}) with mass ≥ R^N/N.
        for r in [2.0, 10.0, 100.0] {
            assert!(w.interpolate(r) >= 1.0 / (5.0 * 3.0) * r.powi(-3) * (1.0 - 1e-9));
        }
    }
}
