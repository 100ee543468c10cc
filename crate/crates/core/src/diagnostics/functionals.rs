use crate::field::Field;
use crate::grid::TorusGrid;
use crate::model::{ModelParams, PksState};
use crate::spectral::{derivative_symbol, dirichlet_energy, inner};

use super::decompose::{remainder, x_average};
use super::DiagnosticsError;

/// Column order of one [`FunctionalValues`] CSV row.
pub const CSV_HEADER: [&str; 13] = [
    "t",
    "mass",
    "mean_C",
    "min_n",
    "max_n",
    "l2_n_neq",
    "l2_gradC_neq",
    "F_M",
    "E",
    "S",
    "P",
    "dt_used",
    "positivity_flag",
];

/// One time sample of every monitored functional.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalValues {
    pub t: f64,
    pub mass: f64,
    pub mean_c: f64,
    pub min_n: f64,
    pub max_n: f64,
    pub l2_n_neq: f64,
    pub l2_grad_c_neq: f64,
    pub f_m: f64,
    pub e: f64,
    pub s: f64,
    pub p: f64,
    pub dt_used: f64,
    pub positivity_flag: bool,
}

impl FunctionalValues {
    /// Row values in [`CSV_HEADER`] order.
    pub fn csv_record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:e}");
        vec![
            f(self.t),
            f(self.mass),
            f(self.mean_c),
            f(self.min_n),
            f(self.max_n),
            f(self.l2_n_neq),
            f(self.l2_grad_c_neq),
            f(self.f_m),
            f(self.e),
            f(self.s),
            f(self.p),
            f(self.dt_used),
            self.positivity_flag.to_string(),
        ]
    }
}

/// Entropy, chemical potential and their sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergy {
    pub e: f64,
    pub s: f64,
    pub p: f64,
}

/// `|∂^α|²` summed over the derivative symbols of one axis.
#[inline]
fn symbol_sqr(grid: &TorusGrid, k: i64, order: u32) -> f64 {
    if order == 0 {
        1.0
    } else {
        derivative_symbol(grid, k, order).norm_sqr()
    }
}

/// Weight `Σ_{|α| <= max_order} A^{α_x + shift} |∂^α|²` of one wave vector.
fn multi_index_weight(grid: &TorusGrid, k: [i64; 3], max_order: u32, a: f64, shift: f64) -> f64 {
    let dim = grid.dim();
    let mut total = 0.0;
    for i in 0..=max_order {
        let wx = a.powf(i as f64 + shift) * symbol_sqr(grid, k[0], i);
        if wx == 0.0 {
            continue;
        }
        let rest = max_order - i;
        match dim {
            1 => total += wx,
            2 => {
                for j in 0..=rest {
                    total += wx * symbol_sqr(grid, k[1], j);
                }
            }
            _ => {
                for j in 0..=rest {
                    let wy = wx * symbol_sqr(grid, k[1], j);
                    if wy == 0.0 {
                        continue;
                    }
                    for l in 0..=(rest - j) {
                        total += wy * symbol_sqr(grid, k[2], l);
                    }
                }
            }
        }
    }
    total
}

fn weighted_norm_sqr(f: &Field, max_order: u32, a: f64, shift: f64) -> f64 {
    let grid = f.grid();
    let c = f.coefficients();
    c.iter()
        .enumerate()
        .filter(|(_, z)| z.norm_sqr() != 0.0)
        .map(|(i, z)| z.norm_sqr() * multi_index_weight(grid, grid.wave_vector(i), max_order, a, shift))
        .sum::<f64>()
        * grid.volume()
}

fn check_remainder(f: &Field) -> Result<(), DiagnosticsError> {
    let avg = x_average(f).max_abs();
    if avg > 1e-12 * f.max_abs().max(1.0) {
        return Err(DiagnosticsError::NotARemainder(avg));
    }
    Ok(())
}

/// `F_M = Σ_{|α|<=M} A^{α_x+1/2} ‖∂^α n_≠‖² + Σ_{|α|<=M+1} A^{α_x} ‖∂^α C_≠‖²`.
pub fn functional_f_m(n_neq: &Field, c_neq: &Field, a: f64, m: u32) -> Result<f64, DiagnosticsError> {
    if m < 3 {
        return Err(DiagnosticsError::InvalidArgument(format!("M must be >= 3, got {m}")));
    }
    if !(a > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!("A must be > 0, got {a}")));
    }
    check_remainder(n_neq)?;
    check_remainder(c_neq)?;
    Ok(weighted_norm_sqr(n_neq, m, a, 0.5) + weighted_norm_sqr(c_neq, m + 1, a, 0.0))
}

/// `‖f_≠‖₂` by Parseval over the `k_x ≠ 0` modes.
pub fn remainder_l2(f: &Field) -> f64 {
    let grid = f.grid();
    let c = f.coefficients();
    let s: f64 = c
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.wave_vector(*i)[0] != 0)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    (s * grid.volume()).sqrt()
}

/// `‖∇f_≠‖₂` by Parseval over the `k_x ≠ 0` modes.
pub fn grad_remainder_l2(f: &Field) -> f64 {
    let grid = f.grid();
    let c = f.coefficients();
    let s: f64 = c
        .iter()
        .enumerate()
        .filter_map(|(i, z)| {
            let k = grid.wave_vector(i);
            (k[0] != 0).then(|| {
                (0..grid.dim()).map(|a| symbol_sqr(grid, k[a], 1)).sum::<f64>() * z.norm_sqr()
            })
        })
        .sum();
    (s * grid.volume()).sqrt()
}

/// Entropy `S = ∫ n log n`, potential `P = ½∫|∇C|² - ∫ C (n - n̄)` and
/// `E = S + P`.
///
/// Values of `n` down to `-1e-10 ‖n‖_∞` are clamped to zero with
/// `0 log 0 = 0`; anything more negative is reported as
/// [`DiagnosticsError::NegativeDensity`] carrying the clamped values.
pub fn free_energy(n: &Field, c: &Field) -> Result<FreeEnergy, DiagnosticsError> {
    if n.grid() != c.grid() {
        return Err(DiagnosticsError::InvalidArgument("fields on different grids".into()));
    }
    let nv = n.values();
    let dv = n.grid().cell_volume();
    let sup = nv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * sup;
    let min = nv.iter().copied().fold(f64::INFINITY, f64::min);
    let s = nv
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
        * dv;
    let n_bar = n.mean();
    let fluct = Field::from_physical(n.grid(), nv.iter().map(|v| v - n_bar).collect()).expect("length");
    let p = 0.5 * dirichlet_energy(c) - inner(c, &fluct);
    let values = FreeEnergy { e: s + p, s, p };
    if min < -tol {
        return Err(DiagnosticsError::NegativeDensity { min, tol, values });
    }
    Ok(values)
}

/// Evaluates every monitored functional of `state`.
///
/// For 3D states `E`, `S`, `P` refer to the `x`-averages; for 2D states the
/// fields themselves are treated as the averaged pair.
pub fn sample_functionals(
    state: &PksState,
    params: &ModelParams,
    dt_used: f64,
    positivity_floor: f64,
) -> FunctionalValues {
    let n = &state.n;
    let c = &state.c;
    let (min_n, max_n) = n.min_max();
    let n_neq = remainder(n);
    let c_neq = remainder(c);
    let f_m = weighted_norm_sqr(&n_neq, params.m, params.a, 0.5)
        + weighted_norm_sqr(&c_neq, params.m + 1, params.a, 0.0);
    let energy = if state.dim() == 3 {
        free_energy(&x_average(n), &x_average(c))
    } else {
        free_energy(n, c)
    };
    let energy = match energy {
        Ok(v) => v,
        Err(DiagnosticsError::NegativeDensity { values, .. }) => values,
        Err(_) => FreeEnergy {
            e: f64::NAN,
            s: f64::NAN,
            p: f64::NAN,
        },
    };
    FunctionalValues {
        t: params.report_time(state.t),
        mass: n.integral(),
        mean_c: c.mean(),
        min_n,
        max_n,
        l2_n_neq: remainder_l2(n),
        l2_grad_c_neq: grad_remainder_l2(c),
        f_m,
        e: energy.e,
        s: energy.s,
        p: energy.p,
        dt_used: params.report_time(dt_used),
        positivity_flag: min_n < positivity_floor,
    }
}
