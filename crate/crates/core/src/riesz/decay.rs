//! Decay of Riesz potentials `|x|^{-α} * f` for `f ~ r^{-β}`.
//!
//! With `β > N - α` the potential decays like
//!
//! * `r^{N-α-β}` when `β < N`,
//! * `r^{-α} ln r` when `β = N`,
//! * `r^{-α}` when `β > N`.

use serde::{Deserialize, Serialize};

use super::convolve_many;
use crate::error::{invalid, Error, Result};
use crate::fit::{linear_fit, two_regressor_fit};
use crate::kernels::Kernel;
use crate::profile::{log_grid, RadialProfile, Tail};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRegime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub regime: DecayRegime,
    /// Decay rate of `f`; infinite for compact support.
    pub beta: f64,
    pub predicted_slope: f64,
    pub fitted_slope: f64,
    /// Coefficient of `ln ln r` in the critical fit
    /// `ln g = c + s ln r + ℓ ln ln r`.
    pub log_power: Option<f64>,
    pub r_squared: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

const MIN_R_SQUARED: f64 = 0.99;
const WINDOW_POINTS: usize = 25;

/// Samples `g = |x|^{-α} * f` on `window` and fits its decay rate.
pub fn decay_fit<P: RadialProfile + ?Sized>(alpha: f64, f: &P, n: u32, window: (f64, f64)) -> Result<DecayFit> {
    let k = Kernel::riesz(alpha);
    k.validate(n)?;
    let (lo, hi) = window;
    if !(lo >= 1e2 && hi > lo) {
        return Err(invalid(format!("decay window [{lo}, {hi}] must satisfy 100 ≤ lo < hi")));
    }
    let beta = match f.tail() {
        Tail::Compact { .. } => f64::INFINITY,
        Tail::Power { exponent, .. } => -exponent,
        Tail::Unknown => return Err(Error::MissingTail("decay fit needs the profile tail".into())),
    };
    let nf = n as f64;
    if !(beta > nf - alpha) {
        return Err(Error::Decay(format!("β = {beta} must exceed N - α = {}", nf - alpha)));
    }
    let regime = if (beta - nf).abs() <= 1e-9 {
        DecayRegime::Critical
    } else if beta < nf {
        DecayRegime::Subcritical
    } else {
        DecayRegime::Supercritical
    };
    let predicted_slope = match regime {
        DecayRegime::Subcritical => nf - alpha - beta,
        _ => -alpha,
    };

    let radii = log_grid(lo, hi, WINDOW_POINTS)?;
    let values = convolve_many(&k, f, 1.0, n, &radii)?;
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Decay("convolution is not positive on the window".into()));
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lg: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (fitted_slope, log_power, r_squared) = if regime == DecayRegime::Critical {
        let llr: Vec<f64> = lr.iter().map(|l| l.ln()).collect();
        let fit = two_regressor_fit(&lr, &llr, &lg)?;
        (fit.b1, Some(fit.b2), fit.r_squared)
    } else {
        let fit = linear_fit(&lr, &lg)?;
        (fit.slope, None, fit.r_squared)
    };
    if r_squared < MIN_R_SQUARED {
        return Err(Error::FitQuality { r_squared, threshold: MIN_R_SQUARED });
    }
    Ok(DecayFit { regime, beta, predicted_slope, fitted_slope, log_power, r_squared, radii, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_expr::RadialExpr;

    #[test]
    fn rejects_slow_decay() {
        // β = 2 = N - α: the potential is infinite.
        let f = RadialExpr::shifted(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(decay_fit(1.0, &f, 3, (1e3, 1e5)), Err(Error::Decay(_))));
    }

    #[test]
    fn rejects_window_near_origin() {
        let f = RadialExpr::shifted(1.0, 1.0, 2.0).unwrap();
        assert!(decay_fit(1.0, &f, 3, (1.0, 1e3)).is_err());
    }
}
