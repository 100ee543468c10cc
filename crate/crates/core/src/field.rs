//! Scalar fields on a [`TorusGrid`] in physical or spectral form.

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Direction, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("field contains non-finite values")]
    NonFiniteField,
    #[error("expected a field in {expected:?} representation")]
    WrongRepresentation { expected: Representation },
    #[error("value buffer has length {got}, grid expects {expected}")]
    Length { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Physical(Vec<f64>),
    /// Fourier-series coefficients: the `k = 0` entry is the spatial mean.
    Spectral(Vec<Complex64>),
}

#[derive(Clone, Debug)]
pub struct Field {
    grid: TorusGrid,
    data: FieldData,
}

impl Field {
    pub fn from_physical(grid: &TorusGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            data: FieldData::Physical(values),
        })
    }

    pub fn from_spectral(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::Length {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            data: FieldData::Spectral(coeffs),
        })
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            data: FieldData::Physical(values),
        }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            data: FieldData::Physical(vec![value; grid.len()]),
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            FieldData::Physical(_) => Representation::Physical,
            FieldData::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn physical(&self) -> Option<&[f64]> {
        match &self.data {
            FieldData::Physical(v) => Some(v),
            FieldData::Spectral(_) => None,
        }
    }

    pub fn spectral(&self) -> Option<&[Complex64]> {
        match &self.data {
            FieldData::Spectral(c) => Some(c),
            FieldData::Physical(_) => None,
        }
    }

    pub fn to_spectral(&self) -> Result<Field, SpectralError> {
        let values = self.physical().ok_or(SpectralError::WrongRepresentation {
            expected: Representation::Physical,
        })?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFiniteField);
        }
        Ok(Field {
            grid: self.grid.clone(),
            data: FieldData::Spectral(forward(&self.grid, values)),
        })
    }

    pub fn to_physical(&self) -> Result<Field, SpectralError> {
        let coeffs = self.spectral().ok_or(SpectralError::WrongRepresentation {
            expected: Representation::Spectral,
        })?;
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SpectralError::NonFiniteField);
        }
        Ok(Field {
            grid: self.grid.clone(),
            data: FieldData::Physical(inverse(&self.grid, coeffs)),
        })
    }

    /// Physical values, transforming if necessary.
    pub fn values(&self) -> Vec<f64> {
        match &self.data {
            FieldData::Physical(v) => v.clone(),
            FieldData::Spectral(c) => inverse(&self.grid, c),
        }
    }

    /// Spectral coefficients, transforming if necessary.
    pub fn coefficients(&self) -> Vec<Complex64> {
        match &self.data {
            FieldData::Physical(v) => forward(&self.grid, v),
            FieldData::Spectral(c) => c.clone(),
        }
    }

    pub fn into_physical(self) -> Field {
        match self.data {
            FieldData::Physical(_) => self,
            FieldData::Spectral(ref c) => Field {
                data: FieldData::Physical(inverse(&self.grid, c)),
                grid: self.grid,
            },
        }
    }

    pub fn into_spectral(self) -> Field {
        match self.data {
            FieldData::Spectral(_) => self,
            FieldData::Physical(ref v) => Field {
                data: FieldData::Spectral(forward(&self.grid, v)),
                grid: self.grid,
            },
        }
    }

    /// `∫ f dV` by the trapezoid rule (spectrally accurate on the torus).
    pub fn integral(&self) -> f64 {
        match &self.data {
            FieldData::Physical(v) => v.iter().sum::<f64>() * self.grid.cell_volume(),
            FieldData::Spectral(c) => c[0].re * self.grid.volume(),
        }
    }

    /// The overline average `|T^d|^{-1} ∫ f`.
    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `‖f‖_{L^2}` from physical-space quadrature.
    pub fn l2_norm(&self) -> f64 {
        let v = self.values();
        (v.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `‖f‖_{L^2}` from Parseval, `|T^d| Σ |f̂_k|²`.
    pub fn l2_norm_spectral(&self) -> f64 {
        let c = self.coefficients();
        (c.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.volume()).sqrt()
    }

    /// `L^p` norm; `p = f64::INFINITY` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_values(&self.values(), p, self.grid.cell_volume())
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            FieldData::Physical(v) => v.iter().all(|x| x.is_finite()),
            FieldData::Spectral(c) => c.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    /// `a·self + b·other`, in physical representation.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        let u = self.values();
        let v = other.values();
        let w = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        Field::from_physical(&self.grid, w)
    }

    pub fn scale(&self, s: f64) -> Field {
        let data = match &self.data {
            FieldData::Physical(v) => FieldData::Physical(v.iter().map(|x| x * s).collect()),
            FieldData::Spectral(c) => FieldData::Spectral(c.iter().map(|z| z * s).collect()),
        };
        Field {
            grid: self.grid.clone(),
            data,
        }
    }
}

/// `L^p` quadrature of raw grid values with cell volume `dv`.
pub fn lp_norm_values(values: &[f64], p: f64, dv: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }
}

pub(crate) fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let mut buf = Vec::with_capacity(values.len());
    forward_into(grid, values, &mut buf);
    buf
}

/// Normalised forward transform of real values into `out`.
pub(crate) fn forward_into(grid: &TorusGrid, values: &[f64], out: &mut Vec<Complex64>) {
    let norm = 1.0 / grid.len() as f64;
    out.clear();
    out.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
    grid.transform(out, Direction::Forward);
    for c in out.iter_mut() {
        *c *= norm;
    }
}

pub(crate) fn inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = Vec::with_capacity(coeffs.len());
    let mut out = Vec::with_capacity(coeffs.len());
    inverse_into(grid, coeffs, &mut buf, &mut out);
    out
}

/// Inverse transform of `coeffs` into `out`, using `buf` as workspace.
pub(crate) fn inverse_into(grid: &TorusGrid, coeffs: &[Complex64], buf: &mut Vec<Complex64>, out: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(coeffs);
    grid.transform(buf, Direction::Inverse);
    out.clear();
    out.extend(buf.iter().map(|c| c.re));
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_field_has_single_mean_coefficient() {
        let g = TorusGrid::new(2, 16).unwrap();
        let s = Field::constant(&g, 1.0).to_spectral().unwrap();
        let c = s.spectral().unwrap();
        assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn cos_y_has_half_coefficients() {
        let g = TorusGrid::new(2, 16).unwrap();
        let s = Field::from_fn(&g, |p| p[1].cos()).to_spectral().unwrap();
        let c = s.spectral().unwrap();
        for (i, z) in c.iter().enumerate() {
            let k = g.wave_vector(i);
            let expect = if k[0] == 0 && k[1].abs() == 1 { 0.5 } else { 0.0 };
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-13, "k={k:?}");
        }
    }

    #[test]
    fn random_roundtrip() {
        let g = TorusGrid::new(2, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = Field::from_physical(&g, vals.clone()).unwrap();
        let back = f.to_spectral().unwrap().to_physical().unwrap();
        let err = back
            .physical()
            .unwrap()
            .iter()
            .zip(&vals)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn rejects_non_finite_and_wrong_form() {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        let f = Field::from_physical(&g, v).unwrap();
        assert_eq!(f.to_spectral().unwrap_err(), SpectralError::NonFiniteField);
        let z = Field::zeros(&g);
        assert!(matches!(
            z.to_physical(),
            Err(SpectralError::WrongRepresentation { .. })
        ));
    }

    #[test]
    fn hermitian_symmetry() {
        let g = TorusGrid::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.random::<f64>()).collect();
        let c = Field::from_physical(&g, vals).unwrap().coefficients();
        let n = g.n_points();
        for i in 0..g.len() {
            let ijk = g.unravel(i);
            let neg = g.ravel([(n - ijk[0]) % n, (n - ijk[1]) % n, (n - ijk[2]) % n]);
            assert!((c[i] - c[neg].conj()).norm() < 1e-14);
        }
    }
}
