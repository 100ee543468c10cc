//! Shear profiles `u(t, y)` driving the `x`-advection.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::field::Field;
use crate::grid::TorusGrid;
use crate::spectral::derivative;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("flow evaluated at invalid time {0}")]
    InvalidTime(f64),
    #[error("custom profile has {got} samples but the y-grid has {expected}")]
    CustomLength { expected: usize, got: usize },
    #[error("Sobolev order {0} exceeds the supported maximum of 8")]
    OrderTooHigh(u32),
    #[error("invalid flow parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowKind {
    Zero,
    StationaryCos,
    StationarySin,
    /// `cos(y + β log(1 + t))`: critical points drift slowly in time.
    TranslatingCos { beta: f64 },
    /// `cos(y + jπ/2)` on the `j`-th window of length `period`.
    AlternatingCos { period: f64 },
    /// Time-independent samples over the y-grid.
    Custom { samples: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub amplitude: f64,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self::new(FlowKind::StationaryCos)
    }
}

impl FlowSpec {
    pub fn new(kind: FlowKind) -> Self {
        Self { kind, amplitude: 1.0 }
    }

    pub fn zero() -> Self {
        Self::new(FlowKind::Zero)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FlowKind::Zero) || self.amplitude == 0.0
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(
            self.kind,
            FlowKind::TranslatingCos { .. } | FlowKind::AlternatingCos { .. }
        )
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(FlowError::InvalidParameter(format!(
                "amplitude must be finite and >= 0, got {}",
                self.amplitude
            )));
        }
        match &self.kind {
            FlowKind::TranslatingCos { beta } if !beta.is_finite() => {
                Err(FlowError::InvalidParameter("beta must be finite".into()))
            }
            FlowKind::AlternatingCos { period } if !(period.is_finite() && *period > 0.0) => {
                Err(FlowError::InvalidParameter("period must be finite and > 0".into()))
            }
            FlowKind::Custom { samples } if samples.iter().any(|v| !v.is_finite()) => {
                Err(FlowError::InvalidParameter("custom samples must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Phase shift applied to the cosine at time `t`.
    fn phase(&self, t: f64) -> f64 {
        match self.kind {
            FlowKind::TranslatingCos { beta } => beta * t.ln_1p(),
            FlowKind::AlternatingCos { period } => (t / period).floor() * FRAC_PI_2,
            _ => 0.0,
        }
    }

    /// `u(t, y)` at each entry of `y_grid`.
    pub fn eval(&self, t: f64, y_grid: &[f64]) -> Result<Vec<f64>, FlowError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(FlowError::InvalidTime(t));
        }
        let a = self.amplitude;
        Ok(match &self.kind {
            FlowKind::Zero => vec![0.0; y_grid.len()],
            FlowKind::StationarySin => y_grid.iter().map(|y| a * y.sin()).collect(),
            FlowKind::StationaryCos
            | FlowKind::TranslatingCos { .. }
            | FlowKind::AlternatingCos { .. } => {
                let phi = self.phase(t);
                y_grid.iter().map(|y| a * (y + phi).cos()).collect()
            }
            FlowKind::Custom { samples } => {
                if samples.len() != y_grid.len() {
                    return Err(FlowError::CustomLength {
                        expected: y_grid.len(),
                        got: samples.len(),
                    });
                }
                samples.iter().map(|s| a * s).collect()
            }
        })
    }

    /// `sup_t ‖u(t, ·)‖_{W^{m,∞}}`, the maximum over derivative orders `0..=m`.
    pub fn sobolev_sup(&self, m: u32) -> Result<f64, FlowError> {
        if m > 8 {
            return Err(FlowError::OrderTooHigh(m));
        }
        match &self.kind {
            FlowKind::Zero => Ok(0.0),
            FlowKind::Custom { samples } => {
                let grid = TorusGrid::new(1, samples.len())
                    .map_err(|e| FlowError::InvalidParameter(e.to_string()))?;
                let f = Field::from_physical(&grid, samples.iter().map(|s| self.amplitude * s).collect())
                    .map_err(|e| FlowError::InvalidParameter(e.to_string()))?;
                let mut best = f.max_abs();
                for order in 1..=m {
                    let d = derivative(&f, 0, order).expect("axis 0 exists");
                    best = best.max(d.max_abs());
                }
                Ok(best)
            }
            // every derivative of a unit cosine/sine is bounded by one
            _ => Ok(self.amplitude),
        }
    }
}

/// Free-function form of [`FlowSpec::eval`].
pub fn eval_flow(spec: &FlowSpec, t: f64, y_grid: &[f64]) -> Result<Vec<f64>, FlowError> {
    spec.eval(t, y_grid)
}

/// Free-function form of [`FlowSpec::sobolev_sup`].
pub fn flow_sobolev_sup(spec: &FlowSpec, m: u32) -> Result<f64, FlowError> {
    spec.sobolev_sup(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn catalog_values() {
        let cos = FlowSpec::new(FlowKind::StationaryCos);
        assert_eq!(cos.eval(17.0, &[0.0]).unwrap(), vec![1.0]);
        let tr = FlowSpec::new(FlowKind::TranslatingCos { beta: 1.0 });
        assert!(tr.eval(0.0, &[PI / 2.0]).unwrap()[0].abs() < 1e-15);
        let alt = FlowSpec::new(FlowKind::AlternatingCos { period: 2.0 });
        assert!(alt.eval(3.0, &[0.0]).unwrap()[0].abs() < 1e-15);
        assert!((alt.eval(1.0, &[0.0]).unwrap()[0] - 1.0).abs() < 1e-15);
        let sin = FlowSpec::new(FlowKind::StationarySin).with_amplitude(0.5);
        assert!((sin.eval(0.0, &[PI / 2.0]).unwrap()[0] - 0.5).abs() < 1e-15);
        assert_eq!(FlowSpec::zero().eval(2.0, &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn negative_time_rejected() {
        let cos = FlowSpec::default();
        assert_eq!(cos.eval(-1.0, &[0.0]), Err(FlowError::InvalidTime(-1.0)));
    }

    #[test]
    fn custom_length_checked() {
        let c = FlowSpec::new(FlowKind::Custom { samples: vec![0.0; 4] });
        assert!(matches!(c.eval(0.0, &[0.0; 8]), Err(FlowError::CustomLength { .. })));
    }

    #[test]
    fn cos_has_two_nondegenerate_critical_points() {
        // u' = -sin y vanishes at 0 and π; u'' = -cos y is ±1 there
        let n = 4096;
        let ys: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let du: Vec<f64> = ys.iter().map(|y| -y.sin()).collect();
        let mut crossings = Vec::new();
        for j in 0..n {
            let (a, b) = (du[j], du[(j + 1) % n]);
            if a == 0.0 || a * b < 0.0 {
                crossings.push(ys[j]);
            }
        }
        assert_eq!(crossings.len(), 2);
        for y in crossings {
            assert!(y.cos().abs() > 0.99);
        }
    }

    #[test]
    fn sobolev_reports() {
        assert_eq!(FlowSpec::default().sobolev_sup(5).unwrap(), 1.0);
        assert_eq!(FlowSpec::zero().sobolev_sup(3).unwrap(), 0.0);
        let n = 64;
        let samples = (0..n)
            .map(|j| 2.0 * (3.0 * 2.0 * PI * j as f64 / n as f64).cos())
            .collect();
        let c = FlowSpec::new(FlowKind::Custom { samples });
        let s = c.sobolev_sup(1).unwrap();
        assert!((s - 6.0).abs() < 1e-8, "{s}");
        assert!(c.sobolev_sup(9).is_err());
    }

    #[test]
    fn translating_is_lipschitz_in_time() {
        let beta = 1.3;
        let f = FlowSpec::new(FlowKind::TranslatingCos { beta });
        let ys: Vec<f64> = (0..32).map(|j| j as f64 * 0.2).collect();
        let h = 1e-3;
        for t in [0.0, 0.5, 3.0, 100.0] {
            let a = f.eval(t, &ys).unwrap();
            let b = f.eval(t + h, &ys).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= beta * h / (1.0 + t) + 1e-12);
            }
        }
    }
}
