//! Experiment configuration: sectioned `key = value` text with `#` comments.

use std::fmt::Write as _;
use std::path::PathBuf;

use pks_core::{FlowKind, FlowSpec, Form, ModelParams};
use serde::Deserialize;
use thiserror::Error;

/// A configuration problem, with the 1-based line it was found on when known.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dim: usize,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 2, n_points: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Rescaled,
    Unscaled,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Shear magnitude; `0` runs without flow.
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "M")]
    pub m: u32,
    pub form: FormName,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dealias: bool,
    /// `‖n‖_∞` growth factor treated as blow-up.
    pub blowup_factor: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            a: p.a,
            m: p.m,
            form: FormName::Rescaled,
            cfl: p.cfl,
            dt_min: p.dt_min,
            dt_max: p.dt_max,
            dealias: p.dealias,
            blowup_factor: pks_core::solver::DEFAULT_BLOWUP_FACTOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowName {
    Zero,
    StationaryCos,
    StationarySin,
    TranslatingCos,
    AlternatingCos,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub kind: FlowName,
    pub amplitude: f64,
    /// Phase speed of `translating_cos`.
    pub beta: f64,
    /// Switching period of `alternating_cos`.
    pub period: f64,
    /// Profile values on the `y` grid for `custom`.
    pub samples: Option<Vec<f64>>,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            kind: FlowName::StationaryCos,
            amplitude: 1.0,
            beta: 1.0,
            period: 1.0,
            samples: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Uniform,
    GaussianBump,
    UniformPlusXPerturb,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub preset: Preset,
    /// Total mass in units of `8π (2π)^{d-2}`.
    pub mass: f64,
    pub bump_width: f64,
    pub perturb_eps: f64,
    pub seed: u64,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            preset: Preset::Uniform,
            mass: 0.5,
            bump_width: 0.5,
            perturb_eps: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    /// In units of `model.form`, before the `A^horizon_exponent` factor.
    pub horizon: f64,
    pub sample_every: f64,
    /// Horizon and sample interval are multiplied by `A^horizon_exponent`.
    pub horizon_exponent: f64,
    /// Adds a sample at rescaled time `A^{1/3 + theta}`.
    pub theta: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            sample_every: 1.0,
            horizon_exponent: 0.0,
            theta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Snapshot interval in units of `model.form`; `0` disables snapshots.
    pub snapshots_every: f64,
    pub csv: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("pks_out"),
            snapshots_every: 0.0,
            csv: "diagnostics.csv".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub flow: FlowSection,
    pub init: InitSection,
    pub time: TimeSection,
    pub output: OutputSection,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `section.key` is assigned, either under a `[section]`
/// header or as a dotted key.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        let dotted = format!("{section}.{key}");
        if (current == section && lhs == key) || (current.is_empty() && lhs == dotted) {
            return Some(i + 1);
        }
    }
    None
}

/// Parses and validates a configuration; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate().map_err(|(section, key, message)| ConfigError {
        line: key_line(text, section, key),
        message: format!("{section}.{key}: {message}"),
    })?;
    Ok(cfg)
}

type Invalid = (&'static str, &'static str, String);

fn require(ok: bool, section: &'static str, key: &'static str, msg: impl FnOnce() -> String) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err((section, key, msg()))
    }
}

impl ExperimentConfig {
    /// Checks every constraint, naming the offending `(section, key)`.
    pub fn validate(&self) -> Result<(), Invalid> {
        let g = &self.grid;
        require(g.dim == 2 || g.dim == 3, "grid", "dim", || format!("must be 2 or 3, got {}", g.dim))?;
        require(g.n_points >= 8 && g.n_points.is_multiple_of(2), "grid", "n_points", || {
            format!("must be even and >= 8, got {}", g.n_points)
        })?;
        let m = &self.model;
        require(m.a == 0.0 || (m.a.is_finite() && m.a >= 1.0), "model", "A", || {
            format!("must be 0 (no flow) or >= 1, got {}", m.a)
        })?;
        require(m.m >= 3, "model", "M", || format!("must be >= 3, got {}", m.m))?;
        require(m.cfl > 0.0 && m.cfl <= 1.0, "model", "cfl", || format!("must lie in (0, 1], got {}", m.cfl))?;
        require(m.dt_min > 0.0 && m.dt_min.is_finite(), "model", "dt_min", || {
            format!("must be finite and > 0, got {}", m.dt_min)
        })?;
        require(m.dt_max >= m.dt_min && m.dt_max.is_finite(), "model", "dt_max", || {
            format!("must be finite and >= dt_min, got {}", m.dt_max)
        })?;
        require(m.blowup_factor > 1.0, "model", "blowup_factor", || {
            format!("must be > 1, got {}", m.blowup_factor)
        })?;
        let f = &self.flow;
        require((0.0..=1.0).contains(&f.amplitude), "flow", "amplitude", || {
            format!("must lie in [0, 1], got {}", f.amplitude)
        })?;
        require(f.beta.is_finite(), "flow", "beta", || format!("must be finite, got {}", f.beta))?;
        require(f.period > 0.0 && f.period.is_finite(), "flow", "period", || {
            format!("must be finite and > 0, got {}", f.period)
        })?;
        match (&f.samples, f.kind) {
            (Some(s), FlowName::Custom) => require(s.len() == g.n_points, "flow", "samples", || {
                format!("needs {} values, got {}", g.n_points, s.len())
            })?,
            (None, FlowName::Custom) => return Err(("flow", "kind", "custom flow needs flow.samples".into())),
            (Some(_), _) => return Err(("flow", "samples", "only used with kind = \"custom\"".into())),
            (None, _) => {}
        }
        if let Err(e) = self.flow_spec().validate() {
            return Err(("flow", "kind", e.to_string()));
        }
        let i = &self.init;
        require(i.mass > 0.0 && i.mass.is_finite(), "init", "mass", || format!("must be > 0, got {}", i.mass))?;
        require(i.bump_width > 0.0 && i.bump_width.is_finite(), "init", "bump_width", || {
            format!("must be > 0, got {}", i.bump_width)
        })?;
        require(i.perturb_eps >= 0.0 && i.perturb_eps.is_finite(), "init", "perturb_eps", || {
            format!("must be >= 0, got {}", i.perturb_eps)
        })?;
        let t = &self.time;
        require(t.horizon > 0.0 && t.horizon.is_finite(), "time", "horizon", || {
            format!("must be > 0, got {}", t.horizon)
        })?;
        require(t.sample_every > 0.0 && t.sample_every.is_finite(), "time", "sample_every", || {
            format!("must be > 0, got {}", t.sample_every)
        })?;
        require(t.horizon_exponent.is_finite(), "time", "horizon_exponent", || {
            format!("must be finite, got {}", t.horizon_exponent)
        })?;
        if let Some(theta) = t.theta {
            require(theta >= 0.0 && theta.is_finite(), "time", "theta", || format!("must be >= 0, got {theta}"))?;
        }
        let o = &self.output;
        require(o.snapshots_every >= 0.0 && o.snapshots_every.is_finite(), "output", "snapshots_every", || {
            format!("must be >= 0, got {}", o.snapshots_every)
        })?;
        require(!o.csv.is_empty(), "output", "csv", || "must not be empty".into())?;
        Ok(())
    }

    /// `A` used for time scaling and initial-data smallness: `1` when the
    /// configured `A` is `0`.
    pub fn effective_a(&self) -> f64 {
        if self.model.a == 0.0 {
            1.0
        } else {
            self.model.a
        }
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            a: self.effective_a(),
            form: match m.form {
                FormName::Rescaled => Form::Rescaled,
                FormName::Unscaled => Form::Unscaled,
            },
            m: m.m,
            cfl: m.cfl,
            dt_min: m.dt_min,
            dt_max: m.dt_max,
            dealias: m.dealias,
        }
    }

    /// Flow of the run; `A = 0` forces the zero flow.
    pub fn flow_spec(&self) -> FlowSpec {
        let f = &self.flow;
        if self.model.a == 0.0 {
            return FlowSpec::zero();
        }
        let kind = match f.kind {
            FlowName::Zero => FlowKind::Zero,
            FlowName::StationaryCos => FlowKind::StationaryCos,
            FlowName::StationarySin => FlowKind::StationarySin,
            FlowName::TranslatingCos => FlowKind::TranslatingCos { beta: f.beta },
            FlowName::AlternatingCos => FlowKind::AlternatingCos { period: f.period },
            FlowName::Custom => FlowKind::Custom {
                samples: f.samples.clone().unwrap_or_default(),
            },
        };
        FlowSpec::new(kind).with_amplitude(f.amplitude)
    }

    /// Horizon in rescaled time.
    pub fn horizon_rescaled(&self) -> f64 {
        self.scaled_time(self.time.horizon)
    }

    pub fn sample_every_rescaled(&self) -> f64 {
        self.scaled_time(self.time.sample_every)
    }

    pub fn snapshots_every_rescaled(&self) -> Option<f64> {
        let s = self.output.snapshots_every;
        (s > 0.0).then(|| self.model_params().rescaled_time(s))
    }

    /// Rescaled time of the `A^{1/3+θ}` probe, if requested.
    pub fn theta_probe(&self) -> Option<f64> {
        self.time.theta.map(|th| self.effective_a().powf(1.0 / 3.0 + th))
    }

    fn scaled_time(&self, t: f64) -> f64 {
        let a = self.effective_a();
        self.model_params().rescaled_time(t * a.powf(self.time.horizon_exponent))
    }

    /// Canonical text form; `parse_config(to_text())` reproduces `self` and
    /// canonical text round-trips byte for byte.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let float = |v: f64| toml::Value::Float(v).to_string();
        let string = |v: &str| toml::Value::String(v.to_string()).to_string();
        let form = match self.model.form {
            FormName::Rescaled => "rescaled",
            FormName::Unscaled => "unscaled",
        };
        let kind = match self.flow.kind {
            FlowName::Zero => "zero",
            FlowName::StationaryCos => "stationary_cos",
            FlowName::StationarySin => "stationary_sin",
            FlowName::TranslatingCos => "translating_cos",
            FlowName::AlternatingCos => "alternating_cos",
            FlowName::Custom => "custom",
        };
        let preset = match self.init.preset {
            Preset::Uniform => "uniform",
            Preset::GaussianBump => "gaussian_bump",
            Preset::UniformPlusXPerturb => "uniform_plus_x_perturb",
        };
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "dim = {}", self.grid.dim);
        let _ = writeln!(s, "n_points = {}", self.grid.n_points);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "A = {}", float(self.model.a));
        let _ = writeln!(s, "M = {}", self.model.m);
        let _ = writeln!(s, "form = {}", string(form));
        let _ = writeln!(s, "cfl = {}", float(self.model.cfl));
        let _ = writeln!(s, "dt_min = {}", float(self.model.dt_min));
        let _ = writeln!(s, "dt_max = {}", float(self.model.dt_max));
        let _ = writeln!(s, "dealias = {}", self.model.dealias);
        let _ = writeln!(s, "blowup_factor = {}", float(self.model.blowup_factor));
        let _ = writeln!(s, "\n[flow]");
        let _ = writeln!(s, "kind = {}", string(kind));
        let _ = writeln!(s, "amplitude = {}", float(self.flow.amplitude));
        let _ = writeln!(s, "beta = {}", float(self.flow.beta));
        let _ = writeln!(s, "period = {}", float(self.flow.period));
        if let Some(samples) = &self.flow.samples {
            let vals: Vec<String> = samples.iter().map(|v| float(*v)).collect();
            let _ = writeln!(s, "samples = [{}]", vals.join(", "));
        }
        let _ = writeln!(s, "\n[init]");
        let _ = writeln!(s, "preset = {}", string(preset));
        let _ = writeln!(s, "mass = {}", float(self.init.mass));
        let _ = writeln!(s, "bump_width = {}", float(self.init.bump_width));
        let _ = writeln!(s, "perturb_eps = {}", float(self.init.perturb_eps));
        let _ = writeln!(s, "seed = {}", self.init.seed);
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "horizon = {}", float(self.time.horizon));
        let _ = writeln!(s, "sample_every = {}", float(self.time.sample_every));
        let _ = writeln!(s, "horizon_exponent = {}", float(self.time.horizon_exponent));
        if let Some(theta) = self.time.theta {
            let _ = writeln!(s, "theta = {}", float(theta));
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", string(&self.output.dir.to_string_lossy()));
        let _ = writeln!(s, "snapshots_every = {}", float(self.output.snapshots_every));
        let _ = writeln!(s, "csv = {}", string(&self.output.csv));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!((c.grid.dim, c.grid.n_points), (2, 64));
        assert_eq!((c.model.a, c.model.m), (1024.0, 3));
        assert_eq!(c.flow.kind, FlowName::StationaryCos);
    }

    #[test]
    fn negative_a_rejected_with_line() {
        let e = parse_config("model.A = -1").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_config("# header\n[model]\nM = 3\nA = -1.0\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().starts_with("line 4: model.A"));
    }

    #[test]
    fn unknown_keys_and_types() {
        let e = parse_config("[grid]\ndim = 2\nwidth = 3\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("[grid]\nn_points = \"many\"\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(parse_config("[bogus]\nx = 1\n").is_err());
        assert!(parse_config("[model]\nM = 2\n").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = ExperimentConfig::default();
        c.time.theta = Some(0.002);
        c.model.form = FormName::Unscaled;
        let text = c.to_text();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn time_conversions() {
        let mut c = parse_config("[model]\nA = 64.0\n[time]\nhorizon = 2.0\nhorizon_exponent = 0.5\n").unwrap();
        assert_eq!(c.horizon_rescaled(), 16.0);
        c.model.form = FormName::Unscaled;
        c.time.horizon_exponent = 0.0;
        assert_eq!(c.horizon_rescaled(), 128.0);
        c.model.a = 0.0;
        assert!(c.flow_spec().is_zero());
        assert_eq!(c.horizon_rescaled(), 2.0);
    }
}
