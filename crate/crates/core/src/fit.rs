//! Ordinary least squares for the decay and tail fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// `y ≈ intercept + b1·x1 + b2·x2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoRegressorFit {
    pub intercept: f64,
    pub b1: f64,
    pub b2: f64,
    pub r_squared: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn r_squared(ys: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let my = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("linear fit needs at least two paired samples"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("linear fit got non-finite samples"));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = r_squared(ys, xs.iter().map(|x| intercept + slope * x));
    Ok(LinearFit { slope, intercept, r_squared })
}

pub fn two_regressor_fit(x1: &[f64], x2: &[f64], ys: &[f64]) -> Result<TwoRegressorFit> {
    let n = ys.len();
    if x1.len() != n || x2.len() != n || n < 3 {
        return Err(invalid("two-regressor fit needs at least three paired samples"));
    }
    if x1.iter().chain(x2).chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("two-regressor fit got non-finite samples"));
    }
    let (m1, m2, my) = (mean(x1), mean(x2), mean(ys));
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b, y) = (x1[i] - m1, x2[i] - m2, ys[i] - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * y;
        s2y += b * y;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-14 * s11 * s22) {
        return Err(invalid("regressors are collinear"));
    }
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let intercept = my - b1 * m1 - b2 * m2;
    let r_squared = r_squared(ys, (0..n).map(|i| intercept + b1 * x1[i] + b2 * x2[i]));
    Ok(TwoRegressorFit { intercept, b1, b2, r_squared })
}

/// Slope of `ln y` against `ln x`; every sample must be positive.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("log-log fit needs positive samples"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
