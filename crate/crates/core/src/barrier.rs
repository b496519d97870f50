//! Spherical-average tools: poly-superharmonicity checks, the radial Poisson
//! cascade with its Taylor bound, and the cutoff-integral diagnostic.
//!
//! Cascade levels use the Laplacian sign convention: level `k` is `Δ^k ū`,
//! and `Δ w = g` with a regular centre is inverted by
//!
//! ```text
//! w(r) = w(0) + ∫_0^r t^{1-N} ∫_0^t s^{N-1} g(s) ds dt.
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::Construction;
use crate::classifier::ProblemParams;
use crate::error::{invalid, Error, Result};
use crate::fit::log_log_fit;
use crate::profile::{sphere_area, RadialProfile, SampledProfile, SmoothPlateau};
use crate::quadrature::{breakpoints, integrate, Tolerance};
use crate::radial_expr::RadialExpr;

/// What [`polysuperharmonic_check`] inspects.
#[derive(Clone, Copy, Debug)]
pub enum Subject<'a> {
    Expr(&'a RadialExpr),
    Construction(&'a Construction),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub j: u32,
    pub min: f64,
    pub argmin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySuperReport {
    pub levels: Vec<LevelCheck>,
    /// Smallest sampled value of `u` itself.
    pub min_u: f64,
    /// Set when `u` dips below zero; reported on its own since the levels
    /// say nothing about the sign of `u`.
    pub negative_u: bool,
    pub pass: bool,
}

/// Samples `(-Δ)^j u` for `1 ≤ j ≤ m` on `grid`. A level passes when its
/// minimum is at least `-1e-12·scale` (`scale = 1` for expressions).
///
/// For a construction `U = scale (v + M W_m)` the levels are
/// `scale((-Δ)^j v + M W_{m-j})` with `W_0 = φ`, all symbolic except the
/// sampled potentials.
pub fn polysuperharmonic_check(u: Subject<'_>, n: u32, m: u32, grid: &[f64]) -> Result<PolySuperReport> {
    if grid.is_empty() || grid.iter().any(|r| !(*r >= 0.0)) {
        return Err(invalid("grid must be a non-empty set of radii r ≥ 0"));
    }
    let (scale, level_fns, u_fn): (f64, Vec<Box<dyn Fn(f64) -> f64 + Sync + '_>>, Box<dyn Fn(f64) -> f64 + Sync + '_>) =
        match u {
            Subject::Expr(e) => {
                let levels = (1..=m)
                    .map(|j| {
                        let lj = e.neg_laplacian_power(n, j);
                        Box::new(move |r: f64| lj.value_at(r)) as Box<dyn Fn(f64) -> f64 + Sync>
                    })
                    .collect();
                (1.0, levels, Box::new(move |r: f64| e.value_at(r)))
            }
            Subject::Construction(c) => {
                if c.params.n != n || c.params.m != m {
                    return Err(invalid("construction was built for a different (N, m)"));
                }
                let levels = (1..=m)
                    .map(|j| {
                        let vj = c.v.neg_laplacian_power(n, j);
                        let k = (m - j) as usize;
                        Box::new(move |r: f64| {
                            let w = if k == 0 { c.correction.plateau.eval(r) } else { c.correction.chain[k - 1].interpolate(r) };
                            c.scale * (vj.value_at(r) + c.big_m * w)
                        }) as Box<dyn Fn(f64) -> f64 + Sync>
                    })
                    .collect();
                let up = c.u();
                (c.scale, levels, Box::new(move |r: f64| up.value(r)))
            }
        };
    let floor = -1e-12 * scale.abs();
    let levels = level_fns
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (argmin, min) = grid.iter().map(|&r| (r, f(r))).fold((f64::NAN, f64::INFINITY), |acc, x| {
                if x.1 < acc.1 || x.1.is_nan() {
                    x
                } else {
                    acc
                }
            });
            LevelCheck { j: i as u32 + 1, min, argmin, pass: min >= floor }
        })
        .collect::<Vec<_>>();
    let min_u = grid.iter().map(|&r| u_fn(r)).fold(f64::INFINITY, f64::min);
    let pass = levels.iter().all(|l| l.pass);
    Ok(PolySuperReport { levels, min_u, negative_u: min_u < 0.0, pass })
}

/// Levels `Δ^k ū`, `k = 0..m-1`, on a shared grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    pub radii: Vec<f64>,
    /// `levels[k]` samples `Δ^k ū`.
    pub levels: Vec<SampledProfile>,
    /// `Δ^k ū(0)`.
    pub center_values: Vec<f64>,
}

// 8-point Gauss-Legendre on [-1, 1]; exact for the cubic Hermite pieces
// times the integer powers of s that occur here.
const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

fn gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W).map(|(x, w)| w * (f(c - h * x) + f(c + h * x))).sum::<f64>() * h
}

/// Relative flatness demanded of each level between the centre and the
/// first grid radius, where it is treated as constant.
const CENTER_FLATNESS: f64 = 1e-3;

/// Inverts `Δ w = g` on `g`'s grid with `w(0) = w0`.
fn invert_laplacian(g: &SampledProfile, g0: f64, n: u32, w0: f64) -> Result<SampledProfile> {
    let nf = n as f64;
    let radii = g.radii();
    let len = radii.len();
    let g_max = g.values().iter().fold(g0.abs(), |acc, v| acc.max(v.abs()));
    let g_first = g.values()[0];
    if (g_first - g0).abs() > CENTER_FLATNESS * g_max {
        return Err(Error::Resolution(format!(
            "level changes by {:.3e} between r = 0 and the first grid radius {:.3e}; start the grid closer to the origin",
            (g_first - g0).abs(),
            radii[0]
        )));
    }
    let gi = |s: f64| g.interpolate(s);
    let r0 = radii[0];
    let mut mass = vec![0.0; len];
    mass[0] = g0 * r0.powf(nf) / nf;
    for i in 1..len {
        mass[i] = mass[i - 1] + gauss(|s| s.powf(nf - 1.0) * gi(s), radii[i - 1], radii[i]);
    }
    let mut values = vec![0.0; len];
    values[0] = w0 + g0 * r0 * r0 / (2.0 * nf);
    for i in 1..len {
        let (a, b) = (radii[i - 1], radii[i]);
        let m_a = mass[i - 1];
        let dw = |t: f64| t.powf(1.0 - nf) * (m_a + gauss(|s| s.powf(nf - 1.0) * gi(s), a, t));
        values[i] = values[i - 1] + gauss(dw, a, b);
    }
    let derivs: Vec<f64> = (0..len).map(|i| radii[i].powf(1.0 - nf) * mass[i]).collect();
    if values.iter().chain(&derivs).any(|v| !v.is_finite()) {
        return Err(Error::Resolution("cascade produced non-finite values".into()));
    }
    SampledProfile::signed(radii.to_vec(), values, Some(derivs), None)
}

/// Rebuilds `Δ^k ū` for `k = m-2, …, 0` from `top = Δ^{m-1} ū` and the
/// centre values `Δ^k ū(0)`, `k = 0..m-2`.
pub fn radial_poisson_cascade(top: &SampledProfile, n: u32, m: u32, center_values: &[f64]) -> Result<CascadeState> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if center_values.len() != (m - 1) as usize {
        return Err(invalid(format!("expected {} centre values, got {}", m - 1, center_values.len())));
    }
    if center_values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("centre values must be finite"));
    }
    // Centre value of the top level: extrapolate the first two nodes in r².
    let (r, v) = (top.radii(), top.values());
    let top0 = if top.len() >= 2 {
        let (q0, q1) = (r[0] * r[0], r[1] * r[1]);
        v[0] - (v[1] - v[0]) * q0 / (q1 - q0)
    } else {
        v[0]
    };
    let mut levels = vec![top.clone()];
    let mut centers = vec![top0];
    for k in (0..(m - 1) as usize).rev() {
        let g = levels.last().expect("non-empty");
        let g0 = *centers.last().expect("non-empty");
        let w = invert_laplacian(g, g0, n, center_values[k])?;
        levels.push(w);
        centers.push(center_values[k]);
    }
    levels.reverse();
    centers.reverse();
    Ok(CascadeState { radii: top.radii().to_vec(), levels, center_values: centers })
}

/// `Σ_{k<m} Δ^k ū(0) r^{2k} / Π_{j≤k} (2j)(N+2j-2)`.
pub fn taylor_bound(center_values: &[f64], n: u32, m: u32, r: f64) -> f64 {
    let nf = n as f64;
    let mut denom = 1.0;
    let mut r2k = 1.0;
    let mut sum = center_values.first().copied().unwrap_or(0.0);
    for k in 1..(m as usize).min(center_values.len()) {
        let j = k as f64;
        denom *= 2.0 * j * (nf + 2.0 * j - 2.0);
        r2k *= r * r;
        sum += center_values[k] * r2k / denom;
    }
    sum
}

/// Truncated Taylor series `Σ c_k t^k` about a fixed point.
#[derive(Clone, Debug, PartialEq)]
struct Jet(Vec<f64>);

impl Jet {
    fn var(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order > 0 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    fn constant(x: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        Jet(c)
    }

    fn order(&self) -> usize {
        self.0.len() - 1
    }

    fn affine(&self, a: f64, b: f64) -> Self {
        let mut c: Vec<f64> = self.0.iter().map(|x| a * x).collect();
        c[0] += b;
        Jet(c)
    }

    fn add(&self, o: &Self) -> Self {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        let k = self.order().min(o.order());
        Jet((0..=k).map(|i| (0..=i).map(|j| self.0[j] * o.0[i - j]).sum()).collect())
    }

    fn recip(&self) -> Self {
        let g = &self.0;
        let mut q = vec![0.0; g.len()];
        q[0] = 1.0 / g[0];
        for k in 1..g.len() {
            q[k] = -q[0] * (1..=k).map(|j| g[j] * q[k - j]).sum::<f64>();
        }
        Jet(q)
    }

    fn exp(&self) -> Self {
        let g = &self.0;
        let mut f = vec![0.0; g.len()];
        f[0] = g[0].exp();
        for k in 1..g.len() {
            f[k] = (1..=k).map(|j| j as f64 * g[j] * f[k - j]).sum::<f64>() / k as f64;
        }
        Jet(f)
    }

    fn powi(&self, e: u32) -> Self {
        (0..e).fold(Jet::constant(1.0, self.order()), |acc, _| acc.mul(self))
    }

    fn derivative(&self) -> Self {
        Jet((1..self.0.len()).map(|k| k as f64 * self.0[k]).collect())
    }

    /// Radial Laplacian `h'' + (N-1) h' / r`; loses two orders.
    fn radial_laplacian(&self, n: u32, r0: f64) -> Self {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        let inv_r = Jet::var(r0, d2.order()).recip();
        d2.add(&Jet(d1.0[..d2.0.len()].to_vec()).mul(&inv_r).affine(n as f64 - 1.0, 0.0))
    }
}

/// Jet of the unit plateau `ψ` at `r0 ∈ (1, 2)`.
fn plateau_jet(r0: f64, order: usize) -> Jet {
    let r = Jet::var(r0, order);
    let edge = |t: &Jet| t.recip().affine(-1.0, 0.0).exp();
    let up = edge(&r.affine(-1.0, 2.0));
    let down = edge(&r.affine(1.0, -1.0));
    up.mul(&up.add(&down).recip())
}

/// `Δ^m(ψ^{4m})` at `r`, from Taylor jets of the plateau.
pub fn plateau_power_laplacian(n: u32, m: u32, r: f64) -> f64 {
    if r <= 1.0 || r >= 2.0 {
        return 0.0;
    }
    let order = 2 * m as usize;
    let mut h = plateau_jet(r, order).powi(4 * m);
    for _ in 0..m {
        h = h.radial_laplacian(n, r);
    }
    h.0[0]
}

/// Smallest sampled `C` with `|Δ^m(ψ^{4m})| ≤ C ψ^{2m}` on `(1, 2)`.
/// Points where `ψ^{2m}` underflows are skipped.
pub fn plateau_constant(n: u32, m: u32) -> f64 {
    let psi = SmoothPlateau { radius: 1.0 };
    (1..4000)
        .map(|i| 1.0 + i as f64 / 4000.0)
        .filter_map(|r| {
            let den = psi.eval(r).powi(2 * m as i32);
            (den > 1e-200).then(|| plateau_power_laplacian(n, m, r).abs() / den)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    #[serde(rename = "R")]
    pub radius: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    /// `u ≡ 0` on the ladder; no ratios are formed.
    pub degenerate: bool,
    pub rows: Vec<CutoffRow>,
    pub min_ratio: f64,
    /// Log-log slope of the ratio against `R`.
    pub slope: f64,
    /// Slope expected for a pure power profile, when it has a clean value.
    pub predicted_slope: Option<f64>,
    /// Holds iff `min_ratio > 0` and `slope ≥ -0.05`.
    pub bounded_below: bool,
    /// Sampled constant of `|Δ^m(ψ^{4m})| ≤ C ψ^{2m}`.
    pub plateau_constant: f64,
}

impl CutoffReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("R,ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e}\n", r.radius, r.ratio));
        }
        s
    }
}

/// `R ∈ {4, 8, …, 512}`.
pub fn default_ladder() -> Vec<f64> {
    (2..=9).map(|k| 2f64.powi(k)).collect()
}

/// `ratio(R) = ∫u φ_R / (R^{2m-N} (∫u^{(p+q)/2} φ_R)²)` with
/// `φ_R = ψ^{2m}(·/R)`, over a ladder of radii `R > 2`.
pub fn cutoff_integral_estimate<P: RadialProfile + ?Sized>(
    u: &P,
    params: &ProblemParams,
    ladder: &[f64],
) -> Result<CutoffReport> {
    params.validate()?;
    if ladder.len() < 2 || ladder.iter().any(|r| !(*r > 2.0)) {
        return Err(invalid("ladder needs at least two radii, all above 2"));
    }
    let (n, m) = (params.n, params.m);
    let nf = n as f64;
    let s = 0.5 * (params.p + params.q);
    let feats = u.features();
    let area = sphere_area(n);
    let integral = |big_r: f64, e: f64| -> f64 {
        let psi = SmoothPlateau { radius: big_r };
        let pts = breakpoints(0.0, 2.0 * big_r, feats.iter().copied().chain([big_r, 1.5 * big_r]));
        let f = |r: f64| {
            let v = u.value(r).max(0.0);
            if v == 0.0 {
                0.0
            } else {
                v.powf(e) * psi.eval(r).powi(2 * m as i32) * r.powf(nf - 1.0)
            }
        };
        area * integrate(f, &pts, Tolerance::new(1e-300, 1e-10), 4000).value
    };
    let pairs: Vec<(f64, f64, f64)> =
        ladder.par_iter().map(|&big_r| (big_r, integral(big_r, 1.0), integral(big_r, s))).collect();
    let plateau_constant = plateau_constant(n, m);
    let predicted_slope = match u.tail() {
        crate::profile::Tail::Power { exponent, .. } => {
            let growth = |e: f64| (nf + e).max(0.0);
            let (a, b) = (nf + exponent, nf + s * exponent);
            (a.abs() > 1e-9 && b.abs() > 1e-9).then(|| growth(exponent) - (2.0 * m as f64 - nf) - 2.0 * growth(s * exponent))
        }
        _ => None,
    };
    if pairs.iter().all(|(_, a, b)| *a == 0.0 && *b == 0.0) {
        return Ok(CutoffReport {
            degenerate: true,
            rows: vec![],
            min_ratio: f64::NAN,
            slope: f64::NAN,
            predicted_slope,
            bounded_below: false,
            plateau_constant,
        });
    }
    let rows: Vec<CutoffRow> = pairs
        .iter()
        .map(|&(big_r, a, b)| CutoffRow { radius: big_r, ratio: a / (big_r.powf(2.0 * m as f64 - nf) * b * b) })
        .collect();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let slope = if min_ratio > 0.0 && min_ratio.is_finite() {
        let xs: Vec<f64> = rows.iter().map(|r| r.radius).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        log_log_fit(&xs, &ys)?.slope
    } else {
        f64::NAN
    };
    Ok(CutoffReport {
        degenerate: false,
        bounded_below: min_ratio > 0.0 && slope >= -0.05,
        rows,
        min_ratio,
        slope,
        predicted_slope,
        plateau_constant,
    })
}
