use super::DiagnosticsError;

/// Default trimmed window: drop the first 20% and the last 10% of samples.
pub const DEFAULT_WINDOW: (f64, f64) = (0.2, 0.9);
/// Constant of the remainder envelope `F_M(t) <= 4e² F_M(0) e^{-2δt/A^{1/3}}`.
pub const ENVELOPE_CONSTANT: f64 = 4.0 * std::f64::consts::E * std::f64::consts::E;

const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit of `log value = intercept - rate·t` over a window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    /// Exponent `α` in `rate ∝ A^{-α}`.
    pub alpha: f64,
    pub r_squared: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub delta_fit: f64,
    pub c_fit: f64,
    pub holds: bool,
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

/// Ordinary least squares. `y` is shifted by its first entry so an exactly
/// constant series gives an exactly zero slope.
fn least_squares(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let y0 = ys[0];
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().map(|y| y - y0).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = (y - y0) - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = y0 + y_mean - slope * x_mean;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Line {
        slope,
        intercept,
        r_squared,
    }
}

/// Fits an exponential decay to `(t, value)` samples over the index window
/// `[lo·len, hi·len)`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, DiagnosticsError> {
    let (lo, hi) = window;
    if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "window must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})"
        )));
    }
    if let Some(&(_, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(DiagnosticsError::CannotFitLog(v));
    }
    let len = series.len();
    let start = (lo * len as f64).floor() as usize;
    let end = ((hi * len as f64).ceil() as usize).min(len);
    let slice = &series[start.min(end)..end];
    if slice.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::InsufficientData {
            need: MIN_FIT_SAMPLES,
            got: slice.len(),
        });
    }
    let xs: Vec<f64> = slice.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = slice.iter().map(|p| p.1.ln()).collect();
    let line = least_squares(&xs, &ys);
    Ok(DecayFit {
        rate: -line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        window: (xs[0], xs[xs.len() - 1]),
    })
}

pub fn fit_decay_default(series: &[(f64, f64)]) -> Result<DecayFit, DiagnosticsError> {
    fit_decay(series, DEFAULT_WINDOW)
}

/// Exponent `α` of `rate ∝ A^{-α}` from a log-log fit.
///
/// Needs at least four distinct `A` spanning a factor of `10^{1.5}`.
pub fn scaling_exponent(fits: &[(f64, f64)]) -> Result<ScalingFit, DiagnosticsError> {
    let mut distinct: Vec<f64> = fits.iter().map(|f| f.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(DiagnosticsError::InsufficientData {
            need: 4,
            got: distinct.len(),
        });
    }
    if let Some(&(a, _)) = fits.iter().find(|(a, _)| !(*a > 0.0)) {
        return Err(DiagnosticsError::CannotFitLog(a));
    }
    if let Some(&(_, r)) = fits.iter().find(|(_, r)| !(*r > 0.0)) {
        return Err(DiagnosticsError::CannotFitLog(r));
    }
    let span = distinct[distinct.len() - 1] / distinct[0];
    if span < 10f64.powf(1.5) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "A values span a factor of {span}, need at least 10^1.5"
        )));
    }
    let xs: Vec<f64> = fits.iter().map(|f| f.0.ln()).collect();
    let ys: Vec<f64> = fits.iter().map(|f| f.1.ln()).collect();
    let line = least_squares(&xs, &ys);
    Ok(ScalingFit {
        alpha: -line.slope,
        r_squared: line.r_squared,
    })
}

/// Tests `F_M(t) <= c F_M(0) exp(-2δ t / A^{1/3})` with `δ` from the decay
/// fit of the series; holds when `δ > 0` and `c <= 4e²`.
pub fn check_envelope(series: &[(f64, f64)], a: f64) -> Result<Envelope, DiagnosticsError> {
    let &(t0, f0) = series
        .first()
        .ok_or(DiagnosticsError::InsufficientData { need: 1, got: 0 })?;
    if !(f0 > 0.0) {
        return Err(DiagnosticsError::CannotFitLog(f0));
    }
    let fit = fit_decay_default(series)?;
    let delta_fit = a.cbrt() * fit.rate / 2.0;
    let c_fit = series
        .iter()
        .map(|&(t, f)| f / f0 * (fit.rate * (t - t0)).exp())
        .fold(0.0f64, f64::max);
    Ok(Envelope {
        delta_fit,
        c_fit,
        holds: delta_fit > 0.0 && c_fit <= ENVELOPE_CONSTANT,
    })
}
