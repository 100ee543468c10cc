// Shared helpers for the integration tests.
#![allow(dead_code)]

use pks_core::lab::{random_mean_zero, random_positive_density, seeded_rng};
use pks_core::{Field, TorusGrid};

pub fn grid(dim: usize, n: usize) -> TorusGrid {
    TorusGrid::new(dim, n).unwrap()
}

/// Random field with a nonzero mean, reproducible from `seed`.
pub fn random_field(g: &TorusGrid, seed: u64, mean: f64) -> Field {
    let f = random_mean_zero(g, &mut seeded_rng(seed));
    f.lin_comb(1.0, &Field::constant(g, mean), 1.0).unwrap()
}

pub fn random_density(g: &TorusGrid, seed: u64, mass: f64) -> Field {
    random_positive_density(g, mass, &mut seeded_rng(seed))
}

pub fn max_diff(a: &Field, b: &Field) -> f64 {
    a.lin_comb(1.0, b, -1.0).unwrap().max_abs()
}

/// Grid translation by `shift` points along axis 0.
pub fn translate_x(f: &Field, shift: usize) -> Field {
    let g = f.grid();
    let n = g.n_points();
    let v = f.values();
    let out = (0..g.len())
        .map(|i| {
            let row = i - i % n;
            v[row + (i % n + shift) % n]
        })
        .collect();
    Field::from_physical(g, out).unwrap()
}
