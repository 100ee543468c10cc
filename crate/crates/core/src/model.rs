//! Model parameters and solver state.

use std::fmt;

use crate::field::Field;

/// Which time variable reported times refer to. The solver always integrates
/// the rescaled system; `t_unscaled = t_rescaled / A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Form {
    #[default]
    Rescaled,
    Unscaled,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Rescaled => "rescaled",
            Form::Unscaled => "unscaled",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Shear magnitude; `1/A` multiplies diffusion and chemotaxis.
    pub a: f64,
    pub form: Form,
    /// Sobolev index of the monitored functional `F_M`.
    pub m: u32,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dealias: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            a: 1024.0,
            form: Form::Rescaled,
            m: 3,
            cfl: 0.1,
            dt_min: 1e-9,
            dt_max: 0.05,
            dealias: true,
        }
    }
}

impl ModelParams {
    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.a.is_finite() && self.a >= 1.0) {
            return Err(format!("A must be finite and >= 1, got {}", self.a));
        }
        if self.m < 3 {
            return Err(format!("M must be >= 3, got {}", self.m));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(format!(
                "need 0 < dt_min <= dt_max < inf, got dt_min={} dt_max={}",
                self.dt_min, self.dt_max
            ));
        }
        Ok(())
    }

    /// Converts a rescaled time to the reporting form.
    pub fn report_time(&self, t_rescaled: f64) -> f64 {
        match self.form {
            Form::Rescaled => t_rescaled,
            Form::Unscaled => t_rescaled / self.a,
        }
    }

    /// Converts a time given in the reporting form to rescaled time.
    pub fn rescaled_time(&self, t_form: f64) -> f64 {
        match self.form {
            Form::Rescaled => t_form,
            Form::Unscaled => t_form * self.a,
        }
    }
}

/// Simulation time (rescaled) plus cell density `n` and chemo-attractant `C`.
#[derive(Clone, Debug)]
pub struct PksState {
    pub t: f64,
    pub n: Field,
    pub c: Field,
}

impl PksState {
    pub fn new(n: Field, c: Field) -> Self {
        Self { t: 0.0, n, c }
    }

    pub fn dim(&self) -> usize {
        self.n.grid().dim()
    }
}
