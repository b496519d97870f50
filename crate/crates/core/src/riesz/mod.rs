//! Radial convolution with singular kernels.
//!
//! For a radial `f` the convolution `(Ψ * f^p)(x)` depends on `r = |x|` only.
//! Writing `y = x + dω` gives
//!
//! ```text
//! (Ψ * f^p)(r) = ∫_0^∞ Ψ(d) d^{N-1} S(r, d) dd,
//! S(r, d)      = |S^{N-2}| ∫_0^π g(ρ(χ)) sin^{N-2}χ dχ,
//! ρ(χ)²        = (r - d)² + 4 r d cos²(χ/2),
//! ```
//!
//! with `g = max(f, 0)^p`; in one dimension `S(r, d) = g(r + d) + g(|r - d|)`.
//! The kernel singularity sits at `d = 0` only, where each kernel supplies a
//! substitution that turns `Ψ(d) d^{N-1} dd` into a bounded density. The
//! outer integral is split where `S` has kinks (`d = |r ± b|` for feature
//! radii `b` of `f`) and continued decade by decade to infinity.

mod bruteforce;
mod decay;
mod potential;

pub use bruteforce::convolve_bruteforce;
pub use decay::{decay_fit, DecayFit, DecayRegime};
pub use potential::{chain_residual, fd_neg_laplacian, newtonian_potential_chain, potential_grid, PotentialChain};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::log_log_fit;
use crate::kernels::{Decision, Kernel};
use crate::profile::{sphere_area, RadialProfile, Tail};
use crate::quadrature::{breakpoints, integrate, Tolerance};

/// Accuracy controls for [`convolve_radial_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolutionOptions {
    /// Relative tolerance of the angular integral.
    pub inner_rel: f64,
    /// Relative tolerance of the distance integral.
    pub outer_rel: f64,
    pub max_intervals: usize,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        Self { inner_rel: 1e-10, outer_rel: 1e-9, max_intervals: 4000 }
    }
}

/// `max(f, 0)^p`.
#[inline]
pub(crate) fn power_part(v: f64, p: f64) -> f64 {
    if v > 0.0 {
        if p == 1.0 {
            v
        } else {
            v.powf(p)
        }
    } else {
        0.0
    }
}

/// Exponent `D` of the radial integrand `r^{D-1}` of `∫_{|y|>1} f^p Ψ dy`
/// and the accompanying log power, or `None` for compactly supported `f`.
fn tail_integrand(k: &Kernel, f_tail: Tail, p: f64, n: u32) -> Result<Option<(f64, f64)>> {
    let law = k.tail_law(n);
    match f_tail {
        Tail::Compact { .. } => Ok(None),
        Tail::Power { exponent, .. } => Ok(Some((n as f64 + p * exponent + law.exponent, law.log_power))),
        Tail::Unknown => Err(Error::MissingTail("profile declares no behaviour beyond its samples".into())),
    }
}

fn tail_integrable(d: f64, log_power: f64) -> bool {
    if d.abs() <= 1e-10 {
        log_power < -1.0
    } else {
        d < 0.0
    }
}

/// Outcome of [`finiteness_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    pub decision: Decision,
    /// Tail exponent of `f` used in the decision (`None` if compact).
    pub profile_tail_exponent: Option<f64>,
    pub kernel_tail_exponent: f64,
    /// `D` in the radial integrand `r^{D-1}`; finite iff `D < 0`.
    pub integrand_exponent: Option<f64>,
    pub method: String,
}

/// Whether `∫_{|y|>1} f(y)^p Ψ(|y|/2) dy < ∞`.
///
/// Decided from the declared tails when available. A sampled profile
/// without a declared tail whose last value is non-zero is judged from the
/// log-log slope of its top decade, and is inconclusive within 0.02 of the
/// critical exponent.
pub fn finiteness_check<P: RadialProfile + ?Sized>(
    f: &P,
    k: &Kernel,
    p: f64,
    n: u32,
    samples: Option<(&[f64], &[f64])>,
) -> Result<FinitenessReport> {
    k.validate(n)?;
    if !(p >= 0.0) || !p.is_finite() {
        return Err(invalid(format!("exponent p = {p} must be non-negative")));
    }
    let law = k.tail_law(n);
    let report = |decision, e: Option<f64>, d: Option<f64>, method: &str| FinitenessReport {
        decision,
        profile_tail_exponent: e,
        kernel_tail_exponent: law.exponent,
        integrand_exponent: d,
        method: method.to_string(),
    };
    match f.tail() {
        Tail::Compact { .. } => Ok(report(Decision::Holds, None, None, "compact support")),
        Tail::Power { exponent, .. } => {
            let d = n as f64 + p * exponent + law.exponent;
            Ok(report(Decision::from_bool(tail_integrable(d, law.log_power)), Some(exponent), Some(d), "symbolic tail"))
        }
        Tail::Unknown => {
            let Some((radii, values)) = samples else {
                return Ok(report(Decision::Inconclusive, None, None, "no tail information"));
            };
            let r_last = radii[radii.len() - 1];
            let idx: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= r_last / 10.0 && values[i] > 0.0).collect();
            if idx.len() < 3 {
                return Ok(report(Decision::Inconclusive, None, None, "too few tail samples"));
            }
            let xs: Vec<f64> = idx.iter().map(|&i| radii[i]).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let fit = log_log_fit(&xs, &ys)?;
            let d = n as f64 + p * fit.slope + law.exponent;
            let decision = if d.abs() < 0.02 { Decision::Inconclusive } else { Decision::from_bool(d < 0.0) };
            Ok(report(decision, Some(fit.slope), Some(d), "numeric tail slope"))
        }
    }
}

/// `(Ψ * f^p)(r)` with default accuracy.
pub fn convolve_radial<P: RadialProfile + ?Sized>(k: &Kernel, f: &P, p: f64, n: u32, r: f64) -> Result<f64> {
    convolve_radial_with(k, f, p, n, r, ConvolutionOptions::default())
}

/// [`convolve_radial`] at many radii in parallel.
pub fn convolve_many<P: RadialProfile + ?Sized>(k: &Kernel, f: &P, p: f64, n: u32, radii: &[f64]) -> Result<Vec<f64>> {
    radii.par_iter().map(|&r| convolve_radial(k, f, p, n, r)).collect()
}

struct Spherical<'a, P: ?Sized> {
    f: &'a P,
    p: f64,
    n: u32,
    r: f64,
    features: &'a [f64],
    tol: Tolerance,
    max_intervals: usize,
    /// `|S^{N-2}|` for the angular integral, `|S^{N-1}|` for degenerate spheres.
    ring: f64,
    full: f64,
}

impl<P: RadialProfile + ?Sized> Spherical<'_, P> {
    fn g(&self, rho: f64) -> f64 {
        power_part(self.f.value(rho), self.p)
    }

    /// Spherical integral `S(r, d)`; returns `(value, converged)`.
    fn eval(&self, d: f64) -> (f64, bool) {
        let r = self.r;
        if self.n == 1 {
            return (self.g(r + d) + self.g((r - d).abs()), true);
        }
        if d == 0.0 || r == 0.0 {
            return (self.full * self.g(r + d), true);
        }
        let diff2 = (r - d) * (r - d);
        let four_rd = 4.0 * r * d;
        let kinks = self.features.iter().filter_map(|&b| {
            let c = (b * b - diff2) / four_rd;
            (c > 0.0 && c < 1.0).then(|| 2.0 * c.sqrt().acos())
        });
        let pts = breakpoints(0.0, std::f64::consts::PI, kinks);
        let power = self.n as i32 - 2;
        let est = integrate(
            |chi: f64| {
                let half = (0.5 * chi).cos();
                let rho = (diff2 + four_rd * half * half).sqrt();
                let w = if power == 0 { 1.0 } else { chi.sin().powi(power) };
                self.g(rho) * w
            },
            &pts,
            self.tol,
            self.max_intervals,
        );
        (self.ring * est.value, est.converged)
    }
}

/// `(Ψ * f^p)(r)` by the distance-outer radial reduction.
pub fn convolve_radial_with<P: RadialProfile + ?Sized>(
    k: &Kernel,
    f: &P,
    p: f64,
    n: u32,
    r: f64,
    opts: ConvolutionOptions,
) -> Result<f64> {
    k.validate(n)?;
    if !(p >= 0.0) || !p.is_finite() {
        return Err(invalid(format!("exponent p = {p} must be non-negative")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid(format!("radius r = {r} must be non-negative")));
    }
    let tail = f.tail();
    let support = match tail {
        Tail::Compact { radius } => Some(radius),
        _ => None,
    };
    if let Some((d, l)) = tail_integrand(k, tail, p, n)? {
        if !tail_integrable(d, l) {
            return Err(Error::NonIntegrable(format!(
                "f^p Ψ decays like r^({:.4}) in dimension {n}; the convolution is infinite",
                d - n as f64
            )));
        }
    }
    if support == Some(0.0) {
        return Ok(0.0);
    }

    let mut features: Vec<f64> = f.features().into_iter().filter(|b| *b > 0.0 && b.is_finite()).collect();
    if let Some(s) = support {
        features.push(s);
    }
    features.sort_by(f64::total_cmp);
    features.dedup();

    let spherical = Spherical {
        f,
        p,
        n,
        r,
        features: &features,
        tol: Tolerance::new(1e-300, opts.inner_rel),
        max_intervals: 400,
        ring: if n >= 2 { sphere_area(n - 1) } else { 1.0 },
        full: sphere_area(n),
    };

    // Distances where S(r, ·) or Ψ changes character.
    let mut outer_pts: Vec<f64> = vec![r];
    for &b in &features {
        outer_pts.extend([(r - b).abs(), r + b]);
    }
    outer_pts.extend(k.features());
    outer_pts.retain(|d| *d > 0.0 && d.is_finite());
    let min_pt = outer_pts.iter().copied().fold(f64::INFINITY, f64::min);
    let d_a = (0.5 * min_pt).min(k.origin_limit());
    let max_pt = outer_pts.iter().copied().fold(0.0, f64::max);

    let inner_failed = std::cell::Cell::new(false);
    let sph = |d: f64| {
        let (v, ok) = spherical.eval(d);
        if !ok {
            inner_failed.set(true);
        }
        v
    };

    let check = |est: crate::quadrature::Estimate| -> Result<f64> {
        if !est.converged || !est.value.is_finite() {
            return Err(Error::QuadratureFailure { value: est.value, error: est.error });
        }
        Ok(est.value)
    };

    // Origin piece in the kernel's regularising coordinate.
    let w_a = k.origin_coordinate(n, d_a);
    let origin = integrate(
        |w| {
            let (d, jac) = k.origin_inverse(n, w);
            jac * sph(d)
        },
        &[0.0, w_a],
        Tolerance::new(0.0, opts.outer_rel),
        opts.max_intervals,
    );
    let mut total = check(origin)?;

    let psi = |d: f64| k.value(n, d) * d.powi(n as i32 - 1);
    let d_end = match support {
        Some(s) => r + s,
        None => 2.0 * (r + max_pt).max(d_a),
    };
    let middle = integrate(
        |d| psi(d) * sph(d),
        &breakpoints(d_a, d_end, outer_pts.iter().copied()),
        Tolerance::new(1e-3 * opts.outer_rel * total.abs(), opts.outer_rel),
        opts.max_intervals,
    );
    total += check(middle)?;

    if support.is_none() {
        total += decade_tail(|d| psi(d) * sph(d), d_end, total, opts, &check)?;
    }
    if inner_failed.get() {
        return Err(Error::QuadratureFailure { value: total, error: f64::NAN });
    }
    Ok(total)
}

/// `∫_{start}^∞ h` by decades, with geometric extrapolation once the
/// decade ratios settle.
fn decade_tail(
    mut h: impl FnMut(f64) -> f64,
    start: f64,
    head: f64,
    opts: ConvolutionOptions,
    check: &impl Fn(crate::quadrature::Estimate) -> Result<f64>,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut lo = start;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    for _ in 0..600 {
        let hi = lo * 10.0;
        if !hi.is_finite() {
            break;
        }
        let scale = (head + sum).abs();
        let piece = check(integrate(
            &mut h,
            &[lo, hi],
            Tolerance::new(1e-3 * opts.outer_rel * scale, opts.outer_rel),
            opts.max_intervals,
        ))?;
        sum += piece;
        lo = hi;
        if piece.abs() <= 1e-3 * opts.outer_rel * (head + sum).abs() {
            return Ok(sum);
        }
        if let Some(pv) = prev {
            if pv != 0.0 {
                let ratio = piece / pv;
                if let Some(pr) = prev_ratio {
                    if (ratio - pr).abs() <= 1e-3 * ratio.abs() {
                        if ratio >= 1.0 {
                            break;
                        }
                        let rest = piece * ratio / (1.0 - ratio);
                        if rest.abs() <= opts.outer_rel * (head + sum).abs() {
                            return Ok(sum + rest);
                        }
                    }
                }
                prev_ratio = Some(ratio);
            }
        }
        prev = Some(piece);
    }
    Err(Error::NonIntegrable(format!("tail integral beyond r = {start:.3e} does not settle")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{FnProfile, SmoothPlateau};
    use crate::radial_expr::RadialExpr;
    use std::f64::consts::PI;

    fn ball() -> FnProfile<impl Fn(f64) -> f64 + Sync> {
        FnProfile::new(|r: f64| if r <= 1.0 { 1.0 } else { 0.0 }, vec![1.0], Tail::Compact { radius: 1.0 })
    }

    #[test]
    fn zero_profile_gives_zero() {
        let z = RadialExpr::zero();
        assert_eq!(convolve_radial(&Kernel::riesz(1.0), &z, 1.0, 3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn newtonian_potential_of_ball() {
        // Outside: (4π/3)/r. Inside: 2π(1 - r²/3).
        let k = Kernel::riesz(1.0);
        let out = convolve_radial(&k, &ball(), 1.0, 3, 2.0).unwrap();
        assert!((out - 4.0 * PI / 6.0).abs() < 1e-8, "{out}");
        let inside = convolve_radial(&k, &ball(), 1.0, 3, 0.5).unwrap();
        assert!((inside - 2.0 * PI * (1.0 - 0.25 / 3.0)).abs() < 1e-8, "{inside}");
    }

    #[test]
    fn one_dimensional_reduction() {
        // ∫_{-1}^{1} |x - y|^{-1/2} dy at x = 2.
        let k = Kernel::riesz(0.5);
        let v = convolve_radial(&k, &ball(), 1.0, 1, 2.0).unwrap();
        let exact = 2.0 * (3f64.sqrt() - 1.0);
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn two_dimensional_smooth_profile() {
        // Gaussian against r^{-1} in the plane at the origin: ∫ e^{-ρ²} ρ^{-1} 2πρ dρ = π^{3/2}.
        let g = FnProfile::new(|r: f64| (-r * r).exp(), vec![1.0], Tail::Power { exponent: -40.0, coeff: 0.0 });
        let v = convolve_radial(&Kernel::riesz(1.0), &g, 1.0, 2, 1e-12).unwrap();
        assert!((v - PI.powf(1.5)).abs() < 1e-7, "{v}");
    }

    #[test]
    fn power_tail_matches_closed_form() {
        // (1+ρ²)^{-2} against r^{-1} in R^3 at r: π² · ... evaluated at the origin = 4π ∫ ρ (1+ρ²)^{-2} = 2π.
        let f = RadialExpr::shifted(1.0, 1.0, 2.0).unwrap();
        let v = convolve_radial(&Kernel::riesz(1.0), &f, 1.0, 3, 1e-9).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let c = RadialExpr::constant(1.0);
        assert!(matches!(convolve_radial(&Kernel::riesz(1.0), &c, 1.0, 3, 1.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn log_kernel_is_integrated() {
        let k = Kernel::log(2.0);
        let plateau = SmoothPlateau::new(1.0).unwrap();
        let v = convolve_radial(&k, &plateau, 1.0, 3, 0.3).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn finiteness_examples() {
        let k = Kernel::riesz(2.0);
        let kappa = 1.5;
        let fk = RadialExpr::power(1.0, -kappa);
        assert_eq!(finiteness_check(&fk, &k, 3.0, 5, None).unwrap().decision, Decision::Holds);
        let c = RadialExpr::constant(1.0);
        assert_eq!(finiteness_check(&c, &k, 1.0, 5, None).unwrap().decision, Decision::Fails);
        let critical = RadialExpr::power(1.0, -3.0);
        assert_eq!(finiteness_check(&critical, &k, 1.0, 5, None).unwrap().decision, Decision::Fails);
    }
}
