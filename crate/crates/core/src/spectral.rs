//! Spectral derivatives, dealiasing and exact multiplier solvers.

use rustfft::num_complex::Complex64;

use crate::field::{Field, Representation, SpectralError};
use crate::grid::TorusGrid;

/// Applies a per-wave-vector multiplier in place.
pub(crate) fn apply_multiplier(
    grid: &TorusGrid,
    coeffs: &mut [Complex64],
    mult: impl Fn([i64; 3]) -> Complex64,
) {
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c *= mult(grid.wave_vector(i));
    }
}

/// `(ik)^order` with the Nyquist mode dropped for odd orders.
#[inline]
pub(crate) fn derivative_symbol(grid: &TorusGrid, k: i64, order: u32) -> Complex64 {
    if order % 2 == 1 && grid.is_nyquist(k) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k as f64).powu(order)
}

#[inline]
pub(crate) fn wave_norm_sqr(k: [i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

/// True when any component of `k` lies outside the 2/3-rule band `|k| <= N/3`.
#[inline]
pub(crate) fn is_aliased(grid: &TorusGrid, k: [i64; 3]) -> bool {
    let n = grid.n_points() as i64;
    k.iter().any(|&kk| 3 * kk.abs() > n)
}

/// Runs `op` on the coefficients of `f` and returns the result in the
/// representation `f` came in.
fn via_spectrum(f: &Field, op: impl FnOnce(&TorusGrid, &mut Vec<Complex64>)) -> Field {
    let grid = f.grid();
    let mut c = f.coefficients();
    op(grid, &mut c);
    let out = Field::from_spectral(grid, c).expect("length preserved");
    match f.representation() {
        Representation::Spectral => out,
        Representation::Physical => out.into_physical(),
    }
}

/// `∂_axis^order f`.
pub fn derivative(f: &Field, axis: usize, order: u32) -> Result<Field, SpectralError> {
    if order == 0 {
        return Err(SpectralError::InvalidArgument("derivative order must be >= 1".into()));
    }
    if axis >= f.grid().dim() {
        return Err(SpectralError::InvalidArgument(format!(
            "axis {axis} out of range for dimension {}",
            f.grid().dim()
        )));
    }
    Ok(via_spectrum(f, |g, c| {
        apply_multiplier(g, c, |k| derivative_symbol(g, k[axis], order))
    }))
}

/// Mixed partial `∂_0^{orders[0]} ∂_1^{orders[1]} ∂_2^{orders[2]} f`.
pub fn mixed_derivative(f: &Field, orders: [u32; 3]) -> Field {
    via_spectrum(f, |g, c| {
        apply_multiplier(g, c, |k| {
            (0..g.dim()).fold(Complex64::new(1.0, 0.0), |acc, a| {
                if orders[a] == 0 {
                    acc
                } else {
                    acc * derivative_symbol(g, k[a], orders[a])
                }
            })
        })
    })
}

/// Gradient components, one field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    (0..f.grid().dim())
        .map(|a| derivative(f, a, 1).expect("axis in range"))
        .collect()
}

pub fn laplacian(f: &Field) -> Field {
    via_spectrum(f, |g, c| {
        apply_multiplier(g, c, |k| Complex64::new(-wave_norm_sqr(k), 0.0))
    })
}

/// 2/3-rule truncation of a spectral field.
pub fn dealias(f: &Field) -> Result<Field, SpectralError> {
    let coeffs = f.spectral().ok_or(SpectralError::WrongRepresentation {
        expected: Representation::Spectral,
    })?;
    let grid = f.grid();
    let mut c = coeffs.to_vec();
    dealias_in_place(grid, &mut c);
    Field::from_spectral(grid, c)
}

pub(crate) fn dealias_in_place(grid: &TorusGrid, coeffs: &mut [Complex64]) {
    for (i, c) in coeffs.iter_mut().enumerate() {
        if is_aliased(grid, grid.wave_vector(i)) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Mean-zero solution `e_f` of `-Δ e_f = f - f̄`.
pub fn solve_poisson(f: &Field) -> Field {
    via_spectrum(f, |g, c| {
        apply_multiplier(g, c, |k| {
            let k2 = wave_norm_sqr(k);
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / k2, 0.0)
            }
        })
    })
}

/// Exact solution operator of `∂_t h = A^{-1} Δ h` over time `t`.
pub fn heat_propagate(f: &Field, t: f64, a: f64) -> Result<Field, SpectralError> {
    if !t.is_finite() || t < 0.0 {
        return Err(SpectralError::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(SpectralError::InvalidArgument(format!("A must be finite and > 0, got {a}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(via_spectrum(f, |g, c| {
        apply_multiplier(g, c, |k| Complex64::new((-t * wave_norm_sqr(k) / a).exp(), 0.0))
    }))
}

/// Pointwise product of two fields, physical output.
pub fn product(f: &Field, g: &Field) -> Result<Field, SpectralError> {
    if f.grid() != g.grid() {
        return Err(SpectralError::GridMismatch);
    }
    let a = f.values();
    let b = g.values();
    Field::from_physical(f.grid(), a.iter().zip(&b).map(|(x, y)| x * y).collect())
}

/// `∫ f g dV` by quadrature.
pub fn inner(f: &Field, g: &Field) -> f64 {
    let a = f.values();
    let b = g.values();
    a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() * f.grid().cell_volume()
}

/// `∫ |∇f|² dV = -∫ f Δf dV`, as `|T^d| Σ |k|² |f̂(k)|²` so that it pairs
/// exactly with [`laplacian`] and [`solve_poisson`] (Nyquist modes included).
pub fn dirichlet_energy(f: &Field) -> f64 {
    let c = f.coefficients();
    let g = f.grid();
    c.iter()
        .enumerate()
        .map(|(i, z)| {
            wave_norm_sqr(g.wave_vector(i)) * z.norm_sqr()
        })
        .sum::<f64>()
        * g.volume()
}
