//! Radial Newtonian potentials and their iterates.
//!
//! For radial `f ≥ 0` decaying fast enough, the solution of `-ΔW = f`
//! vanishing at infinity is
//!
//! ```text
//! W(r) = 1/(N-2) · [ r^{2-N} M(r) + ∫_r^∞ s f(s) ds ],   M(r) = ∫_0^r s^{N-1} f(s) ds,
//! ```
//!
//! with `W'(r) = -r^{1-N} M(r)`. Both integrals are accumulated interval by
//! interval on a log grid; the node derivatives feed the Hermite interpolant
//! of the result. Iterating `m` times gives `W_m` with `(-Δ)^m W_m = f`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::log_log_fit;
use crate::profile::{log_grid, RadialProfile, SampledProfile, Tail};
use crate::quadrature::{breakpoints, integrate, Tolerance};

/// Default grid for the potential chain: 512 log-spaced radii in `[1e-3, 1e5]`.
pub fn potential_grid() -> Vec<f64> {
    log_grid(1e-3, 1e5, 512).expect("constant grid bounds are valid")
}

/// Output of [`newtonian_potential_chain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialChain {
    /// `W_1, …, W_m`.
    pub levels: Vec<SampledProfile>,
    /// `W_k(r) r^{N-2k}` at the last grid radius.
    pub tail_constants: Vec<f64>,
    /// Log-log slope of `W_m` over the top two decades of the grid.
    pub tail_slope: f64,
}

impl PotentialChain {
    pub fn last(&self) -> &SampledProfile {
        self.levels.last().expect("chain has at least one level")
    }
}

fn solve_once<Q: RadialProfile + ?Sized>(f: &Q, n: u32, grid: &[f64]) -> Result<SampledProfile> {
    let nf = n as f64;
    let r_max = grid[grid.len() - 1];
    let (tail_integral, tail_exponent) = match f.tail() {
        Tail::Compact { radius } => {
            if radius > r_max {
                return Err(Error::Decay(format!("source support {radius} extends past the grid end {r_max}")));
            }
            (0.0, 2.0 - nf)
        }
        Tail::Power { exponent, .. } => {
            if !(exponent < -2.0) {
                return Err(Error::Decay(format!(
                    "source decays like r^{exponent:.4}; ∫ s f(s) ds diverges, so no decaying potential exists"
                )));
            }
            let fr = f.value(r_max);
            (fr * r_max * r_max / (-2.0 - exponent), (2.0 - nf).max(exponent + 2.0))
        }
        Tail::Unknown => return Err(Error::MissingTail("potential needs the source tail".into())),
    };

    let features: Vec<f64> = f.features();
    let tol = Tolerance::new(1e-300, 1e-13);
    let piece = |a: f64, b: f64, w: &dyn Fn(f64) -> f64| -> f64 {
        let pts = breakpoints(a, b, features.iter().copied());
        integrate(|s| w(s) * f.value(s), &pts, tol, 400).value
    };
    let mass_weight = |s: f64| s.powf(nf - 1.0);
    let moment_weight = |s: f64| s;

    let len = grid.len();
    let mut mass = vec![0.0; len];
    mass[0] = piece(0.0, grid[0], &mass_weight);
    for i in 1..len {
        mass[i] = mass[i - 1] + piece(grid[i - 1], grid[i], &mass_weight);
    }
    let mut outer = vec![0.0; len];
    outer[len - 1] = tail_integral;
    for i in (0..len - 1).rev() {
        outer[i] = outer[i + 1] + piece(grid[i], grid[i + 1], &moment_weight);
    }
    if mass.iter().chain(&outer).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("potential source must be finite and non-negative"));
    }
    let values: Vec<f64> = (0..len).map(|i| (grid[i].powf(2.0 - nf) * mass[i] + outer[i]) / (nf - 2.0)).collect();
    let derivs: Vec<f64> = (0..len).map(|i| -grid[i].powf(1.0 - nf) * mass[i]).collect();
    SampledProfile::with_derivatives(grid.to_vec(), values, derivs, Some(tail_exponent))
}

/// `W_1, …, W_m` with `-ΔW_1 = f` and `-ΔW_{k+1} = W_k`, all decaying at
/// infinity, sampled on `grid`.
pub fn newtonian_potential_chain<P: RadialProfile + ?Sized>(
    f: &P,
    n: u32,
    m: u32,
    grid: &[f64],
) -> Result<PotentialChain> {
    if m == 0 {
        return Err(invalid("chain length m must be at least 1"));
    }
    if n <= 2 * m {
        return Err(invalid(format!("the chain needs N > 2m (N = {n}, m = {m})")));
    }
    if grid.len() < 5 || !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("potential grid must be positive, increasing, with at least 5 points"));
    }
    let mut levels: Vec<SampledProfile> = Vec::with_capacity(m as usize);
    for k in 0..m {
        let next = match levels.last() {
            None => solve_once(f, n, grid)?,
            Some(prev) => solve_once(prev, n, grid).map_err(|e| match e {
                Error::Decay(msg) => Error::Decay(format!("level {}: {msg}", k + 1)),
                other => other,
            })?,
        };
        levels.push(next);
    }
    let r_max = grid[grid.len() - 1];
    let tail_constants = levels
        .iter()
        .enumerate()
        .map(|(k, w)| w.r_max().powf(n as f64 - 2.0 * (k + 1) as f64) * w.values()[w.len() - 1])
        .collect();
    let last = levels.last().expect("m ≥ 1");
    let idx: Vec<usize> = (0..last.len()).filter(|&i| last.radii()[i] >= r_max / 100.0).collect();
    let tail_slope = if idx.len() >= 2 && last.values()[idx[0]] > 0.0 {
        let xs: Vec<f64> = idx.iter().map(|&i| last.radii()[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| last.values()[i]).collect();
        log_log_fit(&xs, &ys)?.slope
    } else {
        f64::NAN
    };
    Ok(PotentialChain { levels, tail_constants, tail_slope })
}

/// `-Δw(r)` for radial `w` by the 5-point stencil in `t = ln r` with step
/// `h`: `Δw = (w_tt + (N-2) w_t) / r²`.
pub fn fd_neg_laplacian<P: RadialProfile + ?Sized>(w: &P, n: u32, r: f64, h: f64) -> f64 {
    let at = |k: f64| w.value(r * (k * h).exp());
    let (m2, m1, c, p1, p2) = (at(-2.0), at(-1.0), at(0.0), at(1.0), at(2.0));
    let wt = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let wtt = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    -(wtt + (n as f64 - 2.0) * wt) / (r * r)
}

/// Largest residual of `-ΔW_k = W_{k-1}` (`W_0 = f`) over interior nodes,
/// measured with the 5-point stencil on the nodes of a log-uniform grid and
/// normalised by `|W_{k-1}| + |W_k|/r²`.
pub fn chain_residual<P: RadialProfile + ?Sized>(chain: &PotentialChain, f: &P, n: u32) -> Result<f64> {
    let first = &chain.levels[0];
    let radii = first.radii();
    let len = radii.len();
    if len < 5 {
        return Err(invalid("need at least 5 nodes"));
    }
    let h = (radii[1] / radii[0]).ln();
    if radii.windows(2).any(|w| ((w[1] / w[0]).ln() - h).abs() > 1e-9 * h) {
        return Err(invalid("chain residual needs a log-uniform grid"));
    }
    let mut worst: f64 = 0.0;
    for (k, w) in chain.levels.iter().enumerate() {
        let v = w.values();
        for i in 2..len - 2 {
            let r = radii[i];
            let wt = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
            let wtt = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
            let lap = -(wtt + (n as f64 - 2.0) * wt) / (r * r);
            let src = if k == 0 { f.value(r) } else { chain.levels[k - 1].values()[i] };
            let scale = src.abs() + v[i].abs() / (r * r);
            if scale > 0.0 {
                worst = worst.max((lap - src).abs() / scale);
            }
        }
    }
    Ok(worst)
}
