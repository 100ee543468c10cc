use rustfft::num_complex::Complex64;

use crate::field::{Field, Representation};
use crate::grid::TorusGrid;

/// `⟨f⟩`, the average over the `x`-circle, as a field on the remaining axes.
pub fn x_average(f: &Field) -> Field {
    let grid = f.grid();
    let n = grid.n_points();
    assert!(grid.dim() >= 2, "x-average needs at least two axes");
    let sub = TorusGrid::new(grid.dim() - 1, n).expect("sub-grid of a valid grid");
    let v = f.values();
    let avg = v.chunks_exact(n).map(|line| line.iter().sum::<f64>() / n as f64).collect();
    Field::from_physical(&sub, avg).expect("length matches sub-grid")
}

/// `f_≠ = f - ⟨f⟩`, obtained by zeroing every `k_x = 0` coefficient.
pub fn remainder(f: &Field) -> Field {
    let grid = f.grid();
    let mut c = f.coefficients();
    for (i, z) in c.iter_mut().enumerate() {
        if grid.wave_vector(i)[0] == 0 {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let out = Field::from_spectral(grid, c).expect("length");
    match f.representation() {
        Representation::Spectral => out,
        Representation::Physical => out.into_physical(),
    }
}

/// Broadcasts an `x`-independent field over `x` onto `grid`.
pub fn extend_along_x(avg: &Field, grid: &TorusGrid) -> Field {
    let n = grid.n_points();
    let v = avg.values();
    let out = (0..grid.len()).map(|i| v[i / n]).collect();
    Field::from_physical(grid, out).expect("length")
}
