//! Midpoint-rule grid quadrature of the full convolution integral, kept as
//! an independent check on the radial reduction. Not meant for production
//! use: its cost grows like `cells_per_axis^N`.

use rayon::prelude::*;

use super::power_part;
use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::profile::{sphere_area, RadialProfile, Tail};
use crate::quadrature::{integrate, Tolerance};

/// `(Ψ * f^p)(x)` on the cube of half-width `box_halfwidth` centred at `x`,
/// split into `cells_per_axis^N` cells (odd, so `x` is a cell centre).
///
/// The singular cell is replaced by `f(|x|)^p` times the kernel mass of the
/// ball with the same volume. Fails with a resolution error when that
/// correction exceeds 1% of the result, or when the part of `f^p` outside
/// the box could contribute more than 0.1%.
pub fn convolve_bruteforce<P: RadialProfile + ?Sized>(
    k: &Kernel,
    f: &P,
    p: f64,
    n: u32,
    box_halfwidth: f64,
    cells_per_axis: usize,
    x: &[f64],
) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(invalid(format!("brute force supports N ≤ 3, got {n}")));
    }
    if x.len() != n as usize {
        return Err(invalid(format!("point has {} coordinates, expected {n}", x.len())));
    }
    if cells_per_axis < 3 || cells_per_axis % 2 == 0 {
        return Err(invalid("cells_per_axis must be odd and at least 3"));
    }
    if !(box_halfwidth > 0.0) {
        return Err(invalid("box half-width must be positive"));
    }
    k.validate(n)?;
    let norm_x = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let h = 2.0 * box_halfwidth / cells_per_axis as f64;
    let half = (cells_per_axis - 1) / 2;
    let cell_volume = h.powi(n as i32);
    let g = |y: &[f64]| power_part(f.value(y.iter().map(|c| c * c).sum::<f64>().sqrt()), p);

    // Offsets z = y - x share Ψ(|z|) across sign flips, so sum over the
    // non-negative orthant and evaluate f at every reflection.
    let signs = |i: usize| if i == 0 { &[1.0][..] } else { &[1.0, -1.0][..] };
    let dims = n as usize;
    let grid_sum: f64 = (0..=half)
        .into_par_iter()
        .map(|i0| {
            let mut acc = 0.0;
            let mut idx = [i0, 0, 0];
            let rest = if dims >= 2 { half + 1 } else { 1 };
            let last = if dims == 3 { half + 1 } else { 1 };
            for i1 in 0..rest {
                idx[1] = i1;
                for i2 in 0..last {
                    idx[2] = i2;
                    if idx[..dims].iter().all(|&i| i == 0) {
                        continue;
                    }
                    let z = [idx[0] as f64 * h, idx[1] as f64 * h, idx[2] as f64 * h];
                    let dist = z[..dims].iter().map(|c| c * c).sum::<f64>().sqrt();
                    let psi = k.value(n, dist);
                    let mut local = 0.0;
                    let mut y = [0.0; 3];
                    for &s0 in signs(idx[0]) {
                        y[0] = x[0] + s0 * z[0];
                        if dims == 1 {
                            local += g(&y[..1]);
                            continue;
                        }
                        for &s1 in signs(idx[1]) {
                            y[1] = x[1] + s1 * z[1];
                            if dims == 2 {
                                local += g(&y[..2]);
                                continue;
                            }
                            for &s2 in signs(idx[2]) {
                                y[2] = x[2] + s2 * z[2];
                                local += g(&y[..3]);
                            }
                        }
                    }
                    acc += psi * local;
                }
            }
            acc
        })
        .sum::<f64>()
        * cell_volume;

    let area = sphere_area(n);
    let r_eq = h * (n as f64 / area).powf(1.0 / n as f64);
    let singular = power_part(f.value(norm_x), p) * area * k.radial_mass(n, r_eq)?;
    let total = grid_sum + singular;
    if singular.abs() > 0.01 * total.abs() {
        return Err(Error::Resolution(format!(
            "singular-cell correction {singular:.3e} exceeds 1% of the total {total:.3e}; refine the grid"
        )));
    }

    let outside = match f.tail() {
        Tail::Compact { radius } => {
            if norm_x + radius > box_halfwidth {
                return Err(Error::Resolution(format!(
                    "box of half-width {box_halfwidth} does not cover the support (radius {radius}) around |x| = {norm_x}"
                )));
            }
            0.0
        }
        Tail::Power { exponent, coeff } => {
            if box_halfwidth <= norm_x {
                return Err(Error::Resolution("box does not contain the origin".into()));
            }
            // f^p ≤ |coeff|^p (d - |x|)^{p·exponent} beyond distance d from x.
            let c = coeff.abs().powf(p);
            let l = box_halfwidth;
            let est = integrate(
                |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let d = l / t;
                    c * k.value(n, d) * d.powi(n as i32 - 1) * (d - norm_x).powf(p * exponent) * l / (t * t)
                },
                &[0.0, 0.5, 1.0],
                Tolerance::relative(1e-6),
                2000,
            );
            area * est.value
        }
        Tail::Unknown => return Err(Error::MissingTail("brute force needs the profile tail".into())),
    };
    if !(outside <= 1e-3 * total.abs()) {
        return Err(Error::Resolution(format!(
            "mass outside the box may contribute {outside:.3e}, more than 0.1% of {total:.3e}; enlarge the box"
        )));
    }
    Ok(total)
}
