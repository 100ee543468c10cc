use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use pks_core::diagnostics::{check_envelope, fit_decay_default, scaling_exponent, Envelope, FunctionalValues, ScalingFit, CSV_HEADER};
use pks_core::solver::{self, passive_run, RunControl};
use pks_core::{Field, ModelParams, PksState, RunOutcome, RunSink, SolverError, TorusGrid};
use rayon::prelude::*;
use thiserror::Error;

use crate::check::{self, CheckReport};
use crate::config::{parse_config, ConfigError, ExperimentConfig};
use crate::init::{make_initial, InitError};
use crate::snapshot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;

/// Overrides `output.dir` when set.
pub const OUTPUT_DIR_ENV: &str = "PKS_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("initial data: {0}")]
    Init(#[from] InitError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("spectral: {0}")]
    Spectral(#[from] pks_core::SpectralError),
    #[error("{0}")]
    Other(String),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    Ok(parse_config(&text)?)
}

/// `output.dir`, unless [`OUTPUT_DIR_ENV`] is set.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg.output.dir.clone(),
    }
}

/// Writes functional samples as CSV rows and snapshots as numbered files.
pub struct CsvSink {
    writer: csv::Writer<File>,
    snapshot_dir: PathBuf,
    snapshots: usize,
    a: f64,
    pub samples: Vec<FunctionalValues>,
}

impl CsvSink {
    pub fn create(csv_path: &Path, snapshot_dir: PathBuf, a: f64) -> Result<Self, CliError> {
        let file = File::create(csv_path).map_err(io_at(csv_path))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(CSV_HEADER)?;
        Ok(Self {
            writer,
            snapshot_dir,
            snapshots: 0,
            a,
            samples: Vec::new(),
        })
    }

    pub fn finish(mut self) -> Result<Vec<FunctionalValues>, CliError> {
        self.writer.flush().map_err(io_at(&self.snapshot_dir))?;
        Ok(self.samples)
    }
}

impl RunSink for CsvSink {
    fn sample(&mut self, values: &FunctionalValues) -> io::Result<()> {
        self.writer.write_record(values.csv_record()).map_err(io::Error::other)?;
        self.samples.push(values.clone());
        Ok(())
    }

    fn snapshot(&mut self, state: &PksState, _params: &ModelParams) -> io::Result<()> {
        if self.snapshots == 0 {
            fs::create_dir_all(&self.snapshot_dir)?;
        }
        let path = self.snapshot_dir.join(format!("snap_{:05}.pks", self.snapshots));
        self.snapshots += 1;
        snapshot::save(&path, state, self.a)
    }
}

/// Result of one simulation.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub a: f64,
    pub outcome: RunOutcome,
    pub samples: Vec<FunctionalValues>,
    pub dir: PathBuf,
    /// Decay check of the `F_M` series (rescaled time); `None` when it
    /// cannot be fitted.
    pub envelope: Option<Envelope>,
    /// `(t, F_M)` at the `A^{1/3+θ}` probe.
    pub theta_sample: Option<(f64, f64)>,
}

impl RunReport {
    /// Largest `‖n‖_∞` seen over the run.
    pub fn sup_n(&self) -> f64 {
        let sampled = self
            .samples
            .iter()
            .map(|s| s.max_n.abs().max(s.min_n.abs()))
            .fold(0.0f64, f64::max);
        match &self.outcome {
            RunOutcome::BlowUp { sup_n, .. } => sampled.max(*sup_n),
            RunOutcome::Completed(_) => sampled,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.outcome.is_blow_up() {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }

    pub fn outcome_name(&self) -> &'static str {
        match self.outcome {
            RunOutcome::Completed(_) => "completed",
            RunOutcome::BlowUp { .. } => "blow_up",
        }
    }

    pub fn outcome_line(&self) -> String {
        match &self.outcome {
            RunOutcome::Completed(s) => format!(
                "outcome=completed A={} t_end={:e} sup_n={:e} delta_fit={:e}",
                self.a,
                s.t,
                self.sup_n(),
                self.delta_fit()
            ),
            RunOutcome::BlowUp {
                t_detect,
                sup_n,
                reason,
                ..
            } => format!("outcome=blow_up A={} t_detect={t_detect:e} sup_n={sup_n:e} reason={reason}", self.a),
        }
    }

    pub fn delta_fit(&self) -> f64 {
        self.envelope.map_or(f64::NAN, |e| e.delta_fit)
    }
}

/// Runs `cfg` writing into `dir`: canonical config, diagnostics CSV,
/// snapshots and the outcome line.
pub fn run_in_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport, CliError> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_text()).map_err(io_at(&cfg_path))?;
    let init = make_initial(cfg)?;
    let params = cfg.model_params();
    let flow = cfg.flow_spec();
    let mut control = RunControl::new(cfg.horizon_rescaled(), cfg.sample_every_rescaled());
    control.snapshot_every = cfg.snapshots_every_rescaled();
    control.blowup_factor = cfg.model.blowup_factor;
    let probe = cfg.theta_probe();
    control.extra_samples.extend(probe);

    let csv_path = dir.join(&cfg.output.csv);
    let mut sink = CsvSink::create(&csv_path, dir.join("snapshots"), cfg.effective_a())?;
    let outcome = solver::run(&init, &params, &flow, &control, &mut sink)?;
    let samples = sink.finish()?;

    let envelope = match outcome {
        RunOutcome::Completed(_) => {
            let series: Vec<(f64, f64)> = samples.iter().map(|s| (params.rescaled_time(s.t), s.f_m)).collect();
            check_envelope(&series, params.a).ok()
        }
        RunOutcome::BlowUp { .. } => None,
    };
    let theta_sample = probe.and_then(|tp| {
        samples
            .iter()
            .min_by(|x, y| {
                let dx = (params.rescaled_time(x.t) - tp).abs();
                let dy = (params.rescaled_time(y.t) - tp).abs();
                dx.total_cmp(&dy)
            })
            .map(|s| (s.t, s.f_m))
    });
    let report = RunReport {
        a: cfg.model.a,
        outcome,
        samples,
        dir: dir.to_path_buf(),
        envelope,
        theta_sample,
    };
    let mut text = report.outcome_line();
    if let Some((t, f)) = report.theta_sample {
        text.push_str(&format!(" theta_t={t:e} theta_F_M={f:e}"));
    }
    let out_path = dir.join("outcome.txt");
    fs::write(&out_path, text + "\n").map_err(io_at(&out_path))?;
    Ok(report)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    run_in_dir(cfg, &output_dir(cfg))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub outcome: String,
    pub delta_fit: f64,
    pub sup_n_inf: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<RunReport>,
    pub summary_path: PathBuf,
}

impl SweepReport {
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().any(|r| r.outcome.is_blow_up()) {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }
}

fn with_a(cfg: &ExperimentConfig, a: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.model.a = a;
    c
}

fn sorted(a_list: &[f64]) -> Vec<f64> {
    let mut v = a_list.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// One run per `A` (concurrently, isolated directories `A_<value>`), then a
/// summary CSV ordered by `A`. Initial data is regenerated from the seed at
/// every `A`.
pub fn cmd_sweep(cfg: &ExperimentConfig, a_list: &[f64]) -> Result<SweepReport, CliError> {
    let base = output_dir(cfg);
    let a_list = sorted(a_list);
    let mut configs = Vec::with_capacity(a_list.len());
    for &a in &a_list {
        let c = with_a(cfg, a);
        c.validate().map_err(|(s, k, m)| ConfigError {
            line: None,
            message: format!("{s}.{k}: {m}"),
        })?;
        configs.push(c);
    }
    let runs: Vec<RunReport> = configs
        .par_iter()
        .map(|c| run_in_dir(c, &base.join(format!("A_{}", c.model.a))))
        .collect::<Result<_, _>>()?;
    let rows: Vec<SweepRow> = runs
        .iter()
        .map(|r| SweepRow {
            a: r.a,
            outcome: r.outcome_name().to_string(),
            delta_fit: r.delta_fit(),
            sup_n_inf: r.sup_n(),
        })
        .collect();
    let summary_path = base.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record(["A", "outcome", "delta_fit", "sup_n_inf"])?;
    for r in &rows {
        w.write_record([
            r.a.to_string(),
            r.outcome.clone(),
            format!("{:e}", r.delta_fit),
            format!("{:e}", r.sup_n_inf),
        ])?;
    }
    w.flush().map_err(io_at(&summary_path))?;
    Ok(SweepReport {
        rows,
        runs,
        summary_path,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsfitRow {
    pub a: f64,
    pub rate: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug)]
pub struct PsfitReport {
    pub rows: Vec<PsfitRow>,
    pub fit: Option<ScalingFit>,
    pub table_path: PathBuf,
}

/// Passive-scalar decay of `f_in = cos x` for each `A`; fits
/// `rate ∝ A^{-α}`.
pub fn cmd_psfit(cfg: &ExperimentConfig, a_list: &[f64]) -> Result<PsfitReport, CliError> {
    let base = output_dir(cfg);
    fs::create_dir_all(&base).map_err(io_at(&base))?;
    let a_list = sorted(a_list);
    if a_list.iter().any(|a| !(*a >= 1.0)) {
        return Err(CliError::Other("psfit needs every A >= 1".into()));
    }
    let grid = TorusGrid::new(cfg.grid.dim, cfg.grid.n_points).map_err(InitError::from)?;
    let f_in = Field::from_fn(&grid, |p| p[0].cos());
    let rows: Vec<PsfitRow> = a_list
        .par_iter()
        .map(|&a| -> Result<PsfitRow, CliError> {
            let c = with_a(cfg, a);
            let series = passive_run(
                &f_in,
                &c.model_params(),
                &c.flow_spec(),
                c.horizon_rescaled(),
                c.sample_every_rescaled(),
            )?;
            let fit = fit_decay_default(&series.points()).map_err(|e| CliError::Other(format!("A = {a}: {e}")))?;
            Ok(PsfitRow {
                a,
                rate: fit.rate,
                r_squared: fit.r_squared,
            })
        })
        .collect::<Result<_, _>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.a, r.rate)).collect();
    let fit = scaling_exponent(&pairs).ok();
    let table_path = base.join("psfit.csv");
    let mut w = csv::Writer::from_path(&table_path)?;
    w.write_record(["A", "rate", "r_squared"])?;
    for r in &rows {
        w.write_record([r.a.to_string(), format!("{:e}", r.rate), format!("{:e}", r.r_squared)])?;
    }
    w.flush().map_err(io_at(&table_path))?;
    let fit_path = base.join("psfit_exponent.csv");
    let mut w = csv::Writer::from_path(&fit_path)?;
    w.write_record(["alpha", "r_squared"])?;
    let (alpha, r2) = fit.map_or((f64::NAN, f64::NAN), |f| (f.alpha, f.r_squared));
    w.write_record([format!("{alpha:e}"), format!("{r2:e}")])?;
    w.flush().map_err(io_at(&fit_path))?;
    Ok(PsfitReport { rows, fit, table_path })
}

/// Runs the verification suite and writes its CSV report.
pub fn cmd_check(report: Option<&Path>) -> Result<CheckReport, CliError> {
    let path = match report {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d).join("check_report.csv"),
            _ => PathBuf::from("check_report.csv"),
        },
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    let report = check::run_checks(check::CheckSettings::default())?;
    report.write_csv(&path)?;
    Ok(report)
}
