//! Verification suite behind `pks check`.

use std::path::Path;

use pks_core::lab::{
    self, calibrate_log_hls, gradient_bound_series, heat_ratio_suite, interaction_energy,
    interaction_energy_parseval, log_hls_margin, potential_gap, random_mean_zero, random_positive_density,
    seeded_rng, CheckRow, HeatSuiteMax, REPORT_HEADER,
};
use pks_core::solver::{averaged2d_run, MemorySink, RunControl};
use pks_core::{Field, ModelParams, TorusGrid};

use crate::commands::CliError;
use crate::init::gaussian_bump;

#[derive(Clone, Debug)]
pub struct CheckSettings {
    pub seed: u64,
    pub grid_points: usize,
    pub gap_pairs: usize,
    pub hls_samples: usize,
    pub heat_samples: usize,
    /// Bound every heat ratio must stay under.
    pub heat_ratio_limit: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            seed: 2024,
            grid_points: 32,
            gap_pairs: 200,
            hls_samples: 500,
            heat_samples: 200,
            heat_ratio_limit: 10.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
    /// Heat-ratio maxima on `T^1` and `T^2`.
    pub heat: [HeatSuiteMax; 2],
    pub log_hls_c0: f64,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            w.write_record(r.csv_record())?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn lab_err(e: lab::LabError) -> CliError {
    CliError::Other(format!("lab: {e}"))
}

/// Runs every check; the heat constant used by the Duhamel bound is the
/// calibrated 2D gradient constant from the suite run here.
pub fn run_checks(settings: CheckSettings) -> Result<CheckReport, CliError> {
    let s = &settings;
    let t2 = TorusGrid::new(2, s.grid_points).map_err(|e| CliError::Other(e.to_string()))?;
    let t1 = TorusGrid::new(1, 2 * s.grid_points).map_err(|e| CliError::Other(e.to_string()))?;
    let mut rows = Vec::new();

    let mut rng = seeded_rng(s.seed);
    let mut worst_agreement = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut worst_parseval = 0.0f64;
    for _ in 0..s.gap_pairs {
        let f = random_mean_zero(&t2, &mut rng).scale(3.0);
        let offset = Field::constant(&t2, 2.0);
        let f = f.lin_comb(1.0, &offset, 1.0)?;
        let e = random_mean_zero(&t2, &mut rng);
        let gap = potential_gap(&f, &e).map_err(lab_err)?;
        let tol = 1e-9 * gap.direct.abs().max(gap.identity.abs()) + 1e-12;
        worst_agreement = worst_agreement.max((gap.direct - gap.identity).abs() / tol);
        min_gap = min_gap.min(gap.direct).min(gap.identity);
        let i = interaction_energy(&f);
        worst_parseval = worst_parseval.max((i - interaction_energy_parseval(&f)).abs() / i.abs().max(1.0));
    }
    rows.push(CheckRow::bound("potential_gap_agreement", worst_agreement, 1.0));
    rows.push(CheckRow::bound("potential_gap_nonnegative", 0.0, min_gap + 1e-12));
    rows.push(CheckRow::bound("interaction_energy_parseval", worst_parseval, 1e-10));

    let c0 = calibrate_log_hls(&t2, s.hls_samples, s.seed + 1).map_err(lab_err)?;
    let mut fresh = seeded_rng(s.seed + 2);
    let mass = 4.0 * std::f64::consts::PI;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..s.hls_samples {
        let f = random_positive_density(&t2, mass, &mut fresh);
        let r = log_hls_margin(&f, c0).map_err(lab_err)?;
        worst_excess = worst_excess.max(r.lhs - r.rhs_core);
    }
    rows.push(CheckRow::bound("log_hls_fresh_suite", worst_excess, c0));

    let a = 100.0;
    let heat1 = heat_ratio_suite(&t1, a, s.heat_samples, s.seed + 3).map_err(lab_err)?;
    let heat2 = heat_ratio_suite(&t2, a, s.heat_samples, s.seed + 4).map_err(lab_err)?;
    for (d, h) in [(1, heat1), (2, heat2)] {
        rows.push(CheckRow::bound(format!("heat_ratio_plain_d{d}"), h.plain, s.heat_ratio_limit));
        rows.push(CheckRow::bound(format!("heat_ratio_gradient_d{d}"), h.gradient, s.heat_ratio_limit));
    }

    let constant = heat2.calibrated().gradient;
    let samples = subcritical_averaged_run(s.grid_points * 2)?;
    let c_in = samples[0].c.clone();
    for (m, p, q) in [(0u32, 2.0, 2.0), (1, 2.0, 2.0), (0, 4.0, 2.0)] {
        let series = gradient_bound_series(&samples, &c_in, 1.0, p, q, m, constant).map_err(lab_err)?;
        let worst = series
            .iter()
            .filter(|pt| pt.t > 0.0)
            .max_by(|x, y| (x.lhs / x.rhs).total_cmp(&(y.lhs / y.rhs)))
            .expect("non-empty series");
        let mut row = CheckRow::bound(format!("gradient_bound_m{m}_p{p}_q{q}"), worst.lhs, worst.rhs);
        row.pass = series.iter().all(|pt| pt.holds());
        rows.push(row);
    }

    Ok(CheckReport {
        rows,
        heat: [heat1, heat2],
        log_hls_c0: c0,
    })
}

/// States of an averaged run (no flow, `A = 1`) from a Gaussian bump of mass
/// `0.5·8π` with `C_in = e_{n_in}`, every `0.05` up to `t = 2`.
pub fn subcritical_averaged_run(n_points: usize) -> Result<Vec<pks_core::PksState>, CliError> {
    let grid = TorusGrid::new(2, n_points).map_err(|e| CliError::Other(e.to_string()))?;
    let n = gaussian_bump(&grid, 4.0 * std::f64::consts::PI, 0.5)?;
    let c = pks_core::spectral::solve_poisson(&n);
    let init = pks_core::PksState::new(n, c);
    let params = ModelParams {
        a: 1.0,
        ..ModelParams::default()
    };
    let mut control = RunControl::new(2.0, 0.05);
    control.snapshot_every = Some(0.05);
    let mut sink = MemorySink::with_states();
    let outcome = averaged2d_run(&init, &params, &control, None, &mut sink)?;
    if outcome.is_blow_up() {
        return Err(CliError::Other("subcritical averaged run blew up".into()));
    }
    Ok(sink.states)
}
