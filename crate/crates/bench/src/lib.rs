//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use pks_core::spectral::solve_poisson;
use pks_core::{Field, PksState, TorusGrid};

pub fn grid(dim: usize, n_points: usize) -> TorusGrid {
    TorusGrid::new(dim, n_points).expect("valid benchmark grid")
}

/// Smooth positive density with `x`-dependence, paired with `C = e_n`.
pub fn smooth_state(dim: usize, n_points: usize) -> PksState {
    let g = grid(dim, n_points);
    let n = Field::from_fn(&g, |p| {
        (1.0 + 0.4 * p[0].cos() * p[1].sin() + 0.2 * (2.0 * p[1]).cos() + 0.1 * p[2].sin()) / PI
    });
    let c = solve_poisson(&n);
    PksState::new(n, c)
}
