use serde::{Deserialize, Serialize};

use super::{LloydError, LloydTrace};

/// Least-squares line through `(n, ln ε_n)` over the selected window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `exp(slope)`: the asymptotic contraction factor of the energy error.
    pub rate: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Inclusive iteration range of the window.
    pub window: (usize, usize),
    /// Iterations whose error sits above the noise floor.
    pub valid_points: usize,
}

/// Smallest window accepted by the fit.
pub const MIN_WINDOW: usize = 5;

/// Required linearity of the selected window.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Linearity targets tried in turn; stricter targets push the window past
/// the transient towards the asymptotic rate.
const R_SQUARED_TARGETS: [f64; 3] = [0.9999, 0.999, MIN_R_SQUARED];

/// Fits `ε_n = E_n − E_final` from a converged trace.
pub fn convergence_rate(trace: &LloydTrace) -> Result<RateFit, LloydError> {
    let energies = trace.energies();
    if energies.len() < 10 {
        return Err(LloydError::InsufficientData(format!(
            "{} records, need at least 10",
            energies.len()
        )));
    }
    let e_final = *energies.last().unwrap();
    let errors: Vec<f64> = energies[..energies.len() - 1]
        .iter()
        .map(|e| e - e_final)
        .collect();
    fit_rate(&errors, 1e-11 * e_final.abs())
}

/// Fits the rate of a decaying error sequence. Points are used up to the
/// first one at or below `noise_floor`. The window ends at the last valid
/// point and starts as early as possible while `R²` meets the strictest
/// reachable target among 0.9999, 0.999 and 0.99.
pub fn fit_rate(errors: &[f64], noise_floor: f64) -> Result<RateFit, LloydError> {
    let valid = errors
        .iter()
        .position(|&e| !(e > noise_floor))
        .unwrap_or(errors.len());
    if valid < MIN_WINDOW {
        return Err(LloydError::InsufficientData(format!(
            "{valid} errors above the noise floor, need {MIN_WINDOW}"
        )));
    }
    let logs: Vec<f64> = errors[..valid].iter().map(|e| e.ln()).collect();
    let end = valid - 1;
    let best = R_SQUARED_TARGETS.iter().find_map(|&target| {
        (0..=valid - MIN_WINDOW).find_map(|start| {
            let (slope, intercept, r2) = linear_fit(start, &logs[start..]);
            (r2 >= target).then_some((start, slope, intercept, r2))
        })
    });
    let (start, slope, intercept, r_squared) = best.unwrap_or_else(|| {
        let start = valid - MIN_WINDOW;
        let (s, i, r) = linear_fit(start, &logs[start..]);
        (start, s, i, r)
    });
    Ok(RateFit {
        rate: slope.exp(),
        slope,
        intercept,
        r_squared,
        window: (start, end),
        valid_points: valid,
    })
}

/// Ordinary least squares of `y_k` against `x = offset + k`.
fn linear_fit(offset: usize, y: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let xs: Vec<f64> = (0..y.len()).map(|k| (offset + k) as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = y.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}
