use std::f64::consts::PI;

use pks_core::diagnostics::extend_along_x;
use pks_core::spectral::solve_poisson;
use pks_core::{Field, GridError, PksState, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ExperimentConfig, Preset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("bump width {width} is below 3 grid spacings ({min})")]
    UnderResolved { width: f64, min: f64 },
    #[error("initial density is not positive (min {0:e}); reduce init.perturb_eps")]
    NonPositive(f64),
}

/// Total mass for `init.mass`, given in units of `8π (2π)^{d-2}`.
pub fn total_mass(cfg: &ExperimentConfig) -> f64 {
    cfg.init.mass * 8.0 * PI * (2.0 * PI).powi(cfg.grid.dim as i32 - 2)
}

/// Perturbation size actually applied: `eps · A^{-(M+1)/2}`.
pub fn effective_eps(cfg: &ExperimentConfig) -> f64 {
    cfg.init.perturb_eps * cfg.effective_a().powf(-(cfg.model.m as f64 + 1.0) / 2.0)
}

/// Centre of the Gaussian bump: `y = π/2`, where `cos y` shears hardest.
pub const BUMP_CENTER: [f64; 3] = [PI, PI / 2.0, PI];

/// Builds the initial state for the configured preset. Seeded randomness
/// is regenerated on every call.
pub fn make_initial(cfg: &ExperimentConfig) -> Result<PksState, InitError> {
    let grid = TorusGrid::new(cfg.grid.dim, cfg.grid.n_points)?;
    let mass = total_mass(cfg);
    let n_bar = mass / grid.volume();
    let state = match cfg.init.preset {
        Preset::Uniform => PksState::new(Field::constant(&grid, n_bar), Field::zeros(&grid)),
        Preset::GaussianBump => {
            let n = gaussian_bump(&grid, mass, cfg.init.bump_width)?;
            let c = solve_poisson(&n);
            PksState::new(n, c)
        }
        Preset::UniformPlusXPerturb => {
            let eps = effective_eps(cfg);
            let g = random_profile(&grid, cfg.init.seed);
            let gv = g.values();
            let v = (0..grid.len())
                .map(|i| n_bar * (1.0 + eps * grid.point(i)[0].cos() * gv[i]))
                .collect();
            let n = Field::from_physical(&grid, v).expect("length");
            let (min, _) = n.min_max();
            if min <= 0.0 {
                return Err(InitError::NonPositive(min));
            }
            PksState::new(n, Field::zeros(&grid))
        }
    };
    Ok(state)
}

/// Periodized Gaussian of standard deviation `width` at [`BUMP_CENTER`],
/// scaled to total mass `mass`.
pub fn gaussian_bump(grid: &TorusGrid, mass: f64, width: f64) -> Result<Field, InitError> {
    let min = 3.0 * grid.spacing();
    if width < min {
        return Err(InitError::UnderResolved { width, min });
    }
    let dim = grid.dim();
    let images = |x: f64, c: f64| -> f64 {
        (-3..=3)
            .map(|j| {
                let d = x - c + 2.0 * PI * j as f64;
                (-d * d / (2.0 * width * width)).exp()
            })
            .sum()
    };
    let f = Field::from_fn(grid, |p| (0..dim).map(|a| images(p[a], BUMP_CENTER[a])).product());
    let scale = mass / f.integral();
    Ok(f.scale(scale))
}

/// `x`-independent random profile `g(y, z)` built from modes `|k_y|, |k_z| <= 3`,
/// normalized to unit sup.
fn random_profile(grid: &TorusGrid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cross = TorusGrid::new(grid.dim() - 1, grid.n_points()).expect("valid sub-grid");
    let kz_max = if cross.dim() == 2 { 3 } else { 0 };
    let mut modes = Vec::new();
    for ky in -3i32..=3 {
        for kz in -kz_max..=kz_max {
            let a: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            modes.push((ky as f64, kz as f64, a, phi));
        }
    }
    let g = Field::from_fn(&cross, |p| {
        modes
            .iter()
            .map(|(ky, kz, a, phi)| a * (ky * p[0] + kz * p[1] + phi).cos())
            .sum()
    });
    let g = g.scale(1.0 / g.max_abs());
    extend_along_x(&g, grid)
}
