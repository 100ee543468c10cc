//! Integrating-factor Heun (IF-RK2) time stepping for the rescaled
//! Keller-Segel system, the passive scalar, and the `x`-averaged 2D system.
//!
//! Diffusion `A^{-1}Δ` is applied exactly through the multipliers
//! `exp(-dt|k|²/A)`; advection, chemotactic flux and the `n - n̄` source are
//! explicit at both Heun stages:
//!
//! ```text
//! v       = E(dt) (u + dt N(u, t))
//! u_{n+1} = E(dt) (u + dt/2 N(u, t)) + dt/2 N(v, t + dt)
//! ```

use std::cell::RefCell;
use std::io;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::diagnostics::{self, BlowUpReason, BlowUpSignal, FunctionalValues};
use crate::field::{forward_into, inverse_into, Field};
use crate::grid::Direction;
use crate::flows::{FlowError, FlowSpec};
use crate::grid::TorusGrid;
use crate::model::{ModelParams, PksState};
use crate::spectral::{derivative_symbol, is_aliased, wave_norm_sqr};

/// Floor used to keep the CFL quotients finite when a speed vanishes.
pub const DT_GUARD: f64 = 1e-8;
/// Default `‖n‖_∞` growth factor that counts as blow-up.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("non-finite value in right-hand side term `{term}`")]
    NonFiniteRhs { term: &'static str },
    #[error("time step produced non-finite values at t = {t}")]
    StepDiverged { t: f64 },
    #[error("adaptive time step {dt:e} fell below dt_min = {dt_min:e}")]
    TimeStepCollapse { dt: f64, dt_min: f64 },
    #[error("I/O failure while writing run output: {source}")]
    RunIo {
        source: io::Error,
        outcome: Box<RunOutcome>,
    },
}

/// Which explicit terms are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// Full system: advection, chemotaxis and the `n - n̄` source for `C`.
    Chemotaxis,
    /// Advection only; `C` is ignored.
    Passive,
}

/// Injected flux `⟨n_≠ ∇C_≠⟩(t)` for the averaged system, one field per axis.
pub type RemainderFlux = Box<dyn Fn(f64) -> Vec<Field> + Send + Sync>;

#[derive(Clone, Debug)]
pub enum RunOutcome {
    Completed(PksState),
    BlowUp {
        t_detect: f64,
        sup_n: f64,
        reason: BlowUpReason,
        /// Last finite state reached.
        state: PksState,
    },
}

impl RunOutcome {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, RunOutcome::BlowUp { .. })
    }

    pub fn state(&self) -> &PksState {
        match self {
            RunOutcome::Completed(s) => s,
            RunOutcome::BlowUp { state, .. } => state,
        }
    }
}

/// Horizon and output cadence for [`run`]. Times are rescaled.
#[derive(Clone, Debug)]
pub struct RunControl {
    pub horizon: f64,
    pub sample_every: f64,
    pub snapshot_every: Option<f64>,
    /// Additional sample instants (e.g. the `A^{1/3+θ}` probe).
    pub extra_samples: Vec<f64>,
    pub blowup_factor: f64,
}

impl RunControl {
    pub fn new(horizon: f64, sample_every: f64) -> Self {
        Self {
            horizon,
            sample_every,
            snapshot_every: None,
            extra_samples: Vec::new(),
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
        }
    }
}

/// Receives monitored functionals and snapshots during a run.
pub trait RunSink {
    fn sample(&mut self, values: &FunctionalValues) -> io::Result<()>;

    fn snapshot(&mut self, _state: &PksState, _params: &ModelParams) -> io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl RunSink for NullSink {
    fn sample(&mut self, _values: &FunctionalValues) -> io::Result<()> {
        Ok(())
    }
}

/// Keeps samples (and optionally states) in memory.
#[derive(Default)]
pub struct MemorySink {
    pub samples: Vec<FunctionalValues>,
    pub keep_states: bool,
    pub states: Vec<PksState>,
}

impl MemorySink {
    pub fn with_states() -> Self {
        Self {
            keep_states: true,
            ..Default::default()
        }
    }
}

impl RunSink for MemorySink {
    fn sample(&mut self, values: &FunctionalValues) -> io::Result<()> {
        self.samples.push(values.clone());
        Ok(())
    }

    fn snapshot(&mut self, state: &PksState, _params: &ModelParams) -> io::Result<()> {
        if self.keep_states {
            self.states.push(state.clone());
        }
        Ok(())
    }
}

/// Pointwise quantities observed while evaluating the explicit terms.
#[derive(Clone, Copy, Debug, Default)]
pub struct StageStats {
    pub min_n: f64,
    pub max_n: f64,
    pub max_grad_c: f64,
    pub max_u: f64,
}

impl StageStats {
    pub fn sup_n(&self) -> f64 {
        self.max_n.abs().max(self.min_n.abs())
    }
}

/// Per-run stepping engine holding the grid, multipliers and flow.
pub struct Stepper {
    grid: TorusGrid,
    params: ModelParams,
    flow: FlowSpec,
    coupling: Coupling,
    flux: Option<RemainderFlux>,
    y: Vec<f64>,
    k2: Vec<f64>,
    aliased: Vec<bool>,
    /// Derivative symbols `i k_a` per axis, Nyquist dropped.
    ik: Vec<Vec<Complex64>>,
    work: RefCell<Work>,
}

/// Reusable buffers for the explicit terms and Heun stages.
#[derive(Default)]
struct Work {
    spec: Vec<Complex64>,
    n_phys: Vec<f64>,
    real: Vec<f64>,
    fluxes: [Vec<f64>; 3],
    vn: Vec<Complex64>,
    vc: Vec<Complex64>,
    bn: Vec<Complex64>,
    bc: Vec<Complex64>,
}

impl Stepper {
    pub fn new(
        grid: &TorusGrid,
        params: &ModelParams,
        flow: &FlowSpec,
        coupling: Coupling,
    ) -> Result<Self, SolverError> {
        params.validate().map_err(SolverError::Params)?;
        flow.validate()?;
        if grid.dim() < 2 {
            return Err(SolverError::State(
                "the solver needs a 2D or 3D grid".into(),
            ));
        }
        let k2 = (0..grid.len()).map(|i| wave_norm_sqr(grid.wave_vector(i))).collect();
        let aliased = (0..grid.len())
            .map(|i| params.dealias && is_aliased(grid, grid.wave_vector(i)))
            .collect();
        let ik = (0..grid.dim())
            .map(|a| {
                (0..grid.len())
                    .map(|i| derivative_symbol(grid, grid.wave_vector(i)[a], 1))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            flow: flow.clone(),
            coupling,
            flux: None,
            y: grid.axis_coordinates(),
            k2,
            aliased,
            ik,
            work: RefCell::new(Work::default()),
        })
    }

    pub fn with_flux(mut self, flux: Option<RemainderFlux>) -> Self {
        self.flux = flux;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn check_state(&self, state: &PksState) -> Result<(), SolverError> {
        if state.n.grid() != &self.grid || state.c.grid() != &self.grid {
            return Err(SolverError::State("fields are not on the solver grid".into()));
        }
        Ok(())
    }

    /// Flow values along `y` (one entry per y-index) at time `t`.
    fn flow_profile(&self, t: f64) -> Result<Vec<f64>, SolverError> {
        Ok(self.flow.eval(t, &self.y)?)
    }

    /// Explicit (non-diffusive) tendencies `(N_n, N_C)` in spectral space.
    pub fn explicit_terms(
        &self,
        n_hat: &[Complex64],
        c_hat: &[Complex64],
        t: f64,
    ) -> Result<(Vec<Complex64>, Vec<Complex64>, StageStats), SolverError> {
        let mut dn = Vec::new();
        let mut dc = Vec::new();
        let stats = self.explicit_terms_into(n_hat, c_hat, t, &mut dn, &mut dc)?;
        Ok((dn, dc, stats))
    }

    fn explicit_terms_into(
        &self,
        n_hat: &[Complex64],
        c_hat: &[Complex64],
        t: f64,
        dn: &mut Vec<Complex64>,
        dc: &mut Vec<Complex64>,
    ) -> Result<StageStats, SolverError> {
        let grid = &self.grid;
        let dim = grid.dim();
        let len = grid.len();
        let nx = grid.n_points();
        let inv_a = 1.0 / self.params.a;
        let zero = Complex64::new(0.0, 0.0);
        let chem = self.coupling == Coupling::Chemotaxis;
        let mut work = self.work.borrow_mut();
        let Work {
            spec,
            n_phys,
            real,
            fluxes,
            ..
        } = &mut *work;

        inverse_into(grid, n_hat, spec, n_phys);
        let (min_n, max_n) = n_phys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(min_n.is_finite() && max_n.is_finite()) {
            return Err(SolverError::NonFiniteRhs { term: "n" });
        }

        let u = if self.flow.is_zero() {
            None
        } else {
            Some(self.flow_profile(t)?)
        };
        let max_u = u
            .as_ref()
            .map_or(0.0, |u| u.iter().fold(0.0f64, |m, v| m.max(v.abs())));

        dn.clear();
        dn.resize(len, zero);
        dc.clear();
        dc.resize(len, zero);
        let mut active = [false; 3];
        for f in fluxes.iter_mut() {
            f.clear();
            f.resize(len, 0.0);
        }

        // flux components G_a, with dn = -Σ_a ∂_a G_a
        if let Some(u) = &u {
            // x-lines are contiguous; line r has y index r % N
            for (r, (g, nl)) in fluxes[0].chunks_exact_mut(nx).zip(n_phys.chunks_exact(nx)).enumerate() {
                let ur = u[r % nx];
                for (gi, ni) in g.iter_mut().zip(nl) {
                    *gi = ur * ni;
                }
            }
            active[0] = true;
        }
        let mut max_grad_c = 0.0f64;
        if chem {
            let mut grad_sq = vec![0.0; len];
            for a in 0..dim {
                spec.clear();
                spec.extend(c_hat.iter().zip(&self.ik[a]).map(|(c, s)| c * s));
                grid.transform(spec, Direction::Inverse);
                for ((g, gs), (z, ni)) in fluxes[a]
                    .iter_mut()
                    .zip(grad_sq.iter_mut())
                    .zip(spec.iter().zip(n_phys.iter()))
                {
                    *gs += z.re * z.re;
                    *g += inv_a * ni * z.re;
                }
                active[a] = true;
            }
            max_grad_c = grad_sq.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
            if !max_grad_c.is_finite() {
                return Err(SolverError::NonFiniteRhs { term: "grad C" });
            }
        }
        for a in 0..dim {
            if active[a] {
                self.forward_dealiased_into(&fluxes[a], spec);
                for ((d, s), g) in dn.iter_mut().zip(&self.ik[a]).zip(spec.iter()) {
                    *d -= s * g;
                }
            }
        }
        if let Some(flux) = &self.flux {
            let f = flux(t);
            if f.len() != dim {
                return Err(SolverError::State(format!(
                    "remainder flux has {} components, expected {dim}",
                    f.len()
                )));
            }
            for (a, comp) in f.iter().enumerate() {
                let g_hat = comp.coefficients();
                for i in 0..len {
                    dn[i] -= inv_a * self.ik[a][i] * g_hat[i];
                }
            }
        }
        dn[0] = zero;
        if dn.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(SolverError::NonFiniteRhs { term: "chemotaxis/advection of n" });
        }

        if chem {
            if let Some(u) = &u {
                inverse_into(grid, c_hat, spec, real);
                for (r, line) in real.chunks_exact_mut(nx).enumerate() {
                    let ur = u[r % nx];
                    for v in line {
                        *v *= ur;
                    }
                }
                self.forward_dealiased_into(real, spec);
                for ((d, s), g) in dc.iter_mut().zip(&self.ik[0]).zip(spec.iter()) {
                    *d -= s * g;
                }
            }
            for i in 1..len {
                dc[i] += inv_a * n_hat[i];
            }
            dc[0] = zero;
            if dc.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(SolverError::NonFiniteRhs { term: "advection/source of C" });
            }
        }

        Ok(StageStats {
            min_n,
            max_n,
            max_grad_c,
            max_u,
        })
    }

    /// Forward transform of real values into `out`, 2/3 rule applied.
    fn forward_dealiased_into(&self, values: &[f64], out: &mut Vec<Complex64>) {
        forward_into(&self.grid, values, out);
        if self.params.dealias {
            for (z, &drop) in out.iter_mut().zip(&self.aliased) {
                if drop {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// CFL-limited step from stage statistics.
    pub fn dt_from_stats(&self, stats: &StageStats) -> Result<f64, SolverError> {
        let h = self.grid.spacing();
        let p = &self.params;
        let adv = h / stats.max_u.max(DT_GUARD);
        let chem = h / (stats.max_grad_c / p.a).max(DT_GUARD);
        let dt = p.cfl * adv.min(chem);
        if dt < p.dt_min {
            return Err(SolverError::TimeStepCollapse { dt, dt_min: p.dt_min });
        }
        Ok(dt.min(p.dt_max))
    }

    fn propagator(&self, dt: f64) -> Vec<f64> {
        let inv_a = 1.0 / self.params.a;
        self.k2.iter().map(|k2| (-dt * k2 * inv_a).exp()).collect()
    }

    /// One IF-RK2 step given the stage-1 tendencies `(an, ac)` and the
    /// diffusion multipliers `e = exp(-dt|k|²/A)`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        n_hat: &mut [Complex64],
        c_hat: &mut [Complex64],
        t: f64,
        dt: f64,
        an: &[Complex64],
        ac: &[Complex64],
        e: &[f64],
    ) -> Result<(), SolverError> {
        let chem = self.coupling == Coupling::Chemotaxis;
        let (mut vn, mut vc, mut bn, mut bc) = {
            let mut w = self.work.borrow_mut();
            (
                std::mem::take(&mut w.vn),
                std::mem::take(&mut w.vc),
                std::mem::take(&mut w.bn),
                std::mem::take(&mut w.bc),
            )
        };
        vn.clear();
        vn.extend(n_hat.iter().zip(an).zip(e).map(|((u, a), e)| e * (u + dt * a)));
        vc.clear();
        if chem {
            vc.extend(c_hat.iter().zip(ac).zip(e).map(|((u, a), e)| e * (u + dt * a)));
        }
        let result = self.explicit_terms_into(&vn, if chem { &vc } else { c_hat }, t + dt, &mut bn, &mut bc);
        if result.is_ok() {
            let half = 0.5 * dt;
            for (((u, a), b), e) in n_hat.iter_mut().zip(an).zip(&bn).zip(e) {
                *u = e * (*u + half * a) + half * b;
            }
            if chem {
                for (((u, a), b), e) in c_hat.iter_mut().zip(ac).zip(&bc).zip(e) {
                    *u = e * (*u + half * a) + half * b;
                }
                c_hat[0] = Complex64::new(0.0, 0.0);
            }
        }
        {
            let mut w = self.work.borrow_mut();
            w.vn = vn;
            w.vc = vc;
            w.bn = bn;
            w.bc = bc;
        }
        result?;
        let finite = |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(n_hat) || !finite(c_hat) {
            return Err(SolverError::StepDiverged { t: t + dt });
        }
        Ok(())
    }

    /// Advances `state` by a fixed `dt`.
    pub fn step(&self, state: &PksState, dt: f64) -> Result<PksState, SolverError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::Params(format!("dt must be finite and > 0, got {dt}")));
        }
        self.check_state(state)?;
        let mut n_hat = state.n.coefficients();
        let mut c_hat = state.c.coefficients();
        let (an, ac, _) = self.explicit_terms(&n_hat, &c_hat, state.t)?;
        self.advance(&mut n_hat, &mut c_hat, state.t, dt, &an, &ac, &self.propagator(dt))?;
        Ok(PksState {
            t: state.t + dt,
            n: Field::from_spectral(&self.grid, n_hat).expect("length").into_physical(),
            c: Field::from_spectral(&self.grid, c_hat).expect("length").into_physical(),
        })
    }

    /// Integrates to `control.horizon`, sampling functionals along the way.
    pub fn run(
        &self,
        init: &PksState,
        control: &RunControl,
        sink: &mut dyn RunSink,
    ) -> Result<RunOutcome, SolverError> {
        self.check_state(init)?;
        if !(control.horizon > 0.0) {
            return Err(SolverError::Params("horizon must be > 0".into()));
        }
        if !(control.sample_every > 0.0) {
            return Err(SolverError::Params("sample_every must be > 0".into()));
        }
        let mut n_hat = init.n.coefficients();
        let mut c_hat = init.c.coefficients();
        if self.coupling == Coupling::Chemotaxis {
            c_hat[0] = Complex64::new(0.0, 0.0);
        }
        let mut t = init.t;
        let t_end = init.t + control.horizon;
        let init_sup = init.n.max_abs();
        let pos_floor = -0.01 * init_sup;
        let factor = control.blowup_factor;

        let mut events = EventClock::new(init.t, t_end, control);
        let mut io_error: Option<io::Error> = None;
        let mut cached: (f64, Vec<f64>) = (f64::NAN, Vec::new());
        let (mut an, mut ac) = (Vec::new(), Vec::new());
        let (mut prev_n, mut prev_c) = (Vec::new(), Vec::new());

        let state_of = |n: &[Complex64], c: &[Complex64], t: f64| PksState {
            t,
            n: Field::from_spectral(&self.grid, n.to_vec()).expect("length").into_physical(),
            c: Field::from_spectral(&self.grid, c.to_vec()).expect("length").into_physical(),
        };

        let mut record = |state: &PksState, dt: f64, sample: bool, snap: bool, io_error: &mut Option<io::Error>| {
            if io_error.is_some() {
                return;
            }
            if sample {
                let values = diagnostics::sample_functionals(state, &self.params, dt, pos_floor);
                if let Err(e) = sink.sample(&values) {
                    *io_error = Some(e);
                    return;
                }
            }
            if snap {
                if let Err(e) = sink.snapshot(state, &self.params) {
                    *io_error = Some(e);
                }
            }
        };

        let (s0, p0) = events.due(t);
        if s0 || p0 {
            record(&state_of(&n_hat, &c_hat, t), 0.0, s0, p0, &mut io_error);
        }

        let blow_up = |t: f64, sup: f64, reason: BlowUpReason, n: &[Complex64], c: &[Complex64]| {
            RunOutcome::BlowUp {
                t_detect: self.params.report_time(t),
                sup_n: sup,
                reason,
                state: state_of(n, c, t),
            }
        };

        let outcome = loop {
            if events.finished(t) {
                break RunOutcome::Completed(state_of(&n_hat, &c_hat, t));
            }
            let stats = match self.explicit_terms_into(&n_hat, &c_hat, t, &mut an, &mut ac) {
                Ok(r) => r,
                Err(SolverError::NonFiniteRhs { .. }) => {
                    break blow_up(t, f64::INFINITY, BlowUpReason::NonFinite, &n_hat, &c_hat)
                }
                Err(e) => return Err(e),
            };
            if let Some(sig) = BlowUpSignal::from_sup(t, stats.sup_n(), init_sup, factor) {
                break blow_up(t, sig.sup_n, sig.reason, &n_hat, &c_hat);
            }
            let dt_adapt = match self.dt_from_stats(&stats) {
                Ok(dt) => dt,
                Err(SolverError::TimeStepCollapse { .. }) => {
                    break blow_up(t, stats.sup_n(), BlowUpReason::TimeStepCollapse, &n_hat, &c_hat)
                }
                Err(e) => return Err(e),
            };
            let dt = events.clamp(t, dt_adapt);
            if cached.0 != dt {
                cached = (dt, self.propagator(dt));
            }
            prev_n.clone_from(&n_hat);
            prev_c.clone_from(&c_hat);
            match self.advance(&mut n_hat, &mut c_hat, t, dt, &an, &ac, &cached.1) {
                Ok(()) => {}
                Err(SolverError::StepDiverged { .. }) | Err(SolverError::NonFiniteRhs { .. }) => {
                    break blow_up(t, f64::INFINITY, BlowUpReason::NonFinite, &prev_n, &prev_c)
                }
                Err(e) => return Err(e),
            }
            t = events.snap_time(t + dt);
            let (s, p) = events.due(t);
            if s || p {
                record(&state_of(&n_hat, &c_hat, t), dt_adapt, s, p, &mut io_error);
            }
        };

        match io_error {
            Some(source) => Err(SolverError::RunIo {
                source,
                outcome: Box::new(outcome),
            }),
            None => Ok(outcome),
        }
    }
}

/// Tracks sample/snapshot/horizon instants so steps land on them exactly.
struct EventClock {
    t0: f64,
    t_end: f64,
    sample_every: f64,
    k_sample: u64,
    snapshot_every: Option<f64>,
    k_snapshot: u64,
    /// Extra sample instants, latest first.
    extras: Vec<f64>,
    horizon_sampled: bool,
    tol: f64,
}

impl EventClock {
    fn new(t0: f64, t_end: f64, control: &RunControl) -> Self {
        let mut extras: Vec<f64> = control
            .extra_samples
            .iter()
            .map(|e| t0 + e)
            .filter(|e| *e > t0 && *e <= t_end)
            .collect();
        extras.sort_by(|a, b| b.total_cmp(a));
        Self {
            t0,
            t_end,
            sample_every: control.sample_every,
            k_sample: 0,
            snapshot_every: control.snapshot_every.filter(|s| *s > 0.0),
            k_snapshot: 0,
            extras,
            horizon_sampled: false,
            tol: 1e-12 * (t_end - t0).abs().max(1.0),
        }
    }

    fn tick(&self, every: f64, k: u64) -> f64 {
        self.t0 + k as f64 * every
    }

    fn next_event(&self) -> f64 {
        let mut next = self.t_end.min(self.tick(self.sample_every, self.k_sample));
        if let Some(every) = self.snapshot_every {
            next = next.min(self.tick(every, self.k_snapshot));
        }
        if let Some(e) = self.extras.last() {
            next = next.min(*e);
        }
        next
    }

    /// Shortens `dt` so the step ends on the next event.
    fn clamp(&self, t: f64, dt: f64) -> f64 {
        let remaining = self.next_event() - t;
        if remaining > 0.0 && dt >= remaining - self.tol {
            remaining
        } else {
            dt
        }
    }

    fn snap_time(&self, t: f64) -> f64 {
        let e = self.next_event();
        if (t - e).abs() <= self.tol {
            e
        } else {
            t
        }
    }

    /// Whether a sample and/or snapshot is due at `t`; advances the counters.
    fn due(&mut self, t: f64) -> (bool, bool) {
        let limit = t + self.tol;
        let mut sample = false;
        loop {
            let s = self.tick(self.sample_every, self.k_sample);
            if s <= limit && s <= self.t_end + self.tol {
                sample = true;
                self.k_sample += 1;
            } else {
                break;
            }
        }
        while self.extras.last().is_some_and(|e| *e <= limit) {
            self.extras.pop();
            sample = true;
        }
        if !self.horizon_sampled && t >= self.t_end - self.tol {
            self.horizon_sampled = true;
            sample = true;
        }
        let mut snap = false;
        if let Some(every) = self.snapshot_every {
            loop {
                let s = self.tick(every, self.k_snapshot);
                if s <= limit && s <= self.t_end + self.tol {
                    snap = true;
                    self.k_snapshot += 1;
                } else {
                    break;
                }
            }
        }
        (sample, snap)
    }

    fn finished(&self, t: f64) -> bool {
        t >= self.t_end - self.tol
    }
}

/// Full right-hand side `(∂_t n, ∂_t C)` of the rescaled system, diffusion
/// included, in physical space.
pub fn rhs(state: &PksState, params: &ModelParams, flow: &FlowSpec) -> Result<(Field, Field), SolverError> {
    let stepper = Stepper::new(state.n.grid(), params, flow, Coupling::Chemotaxis)?;
    stepper.check_state(state)?;
    let n_hat = state.n.coefficients();
    let c_hat = state.c.coefficients();
    let (mut dn, mut dc, _) = stepper.explicit_terms(&n_hat, &c_hat, state.t)?;
    let inv_a = 1.0 / params.a;
    for i in 0..dn.len() {
        dn[i] -= inv_a * stepper.k2[i] * n_hat[i];
        dc[i] -= inv_a * stepper.k2[i] * c_hat[i];
    }
    let grid = state.n.grid();
    Ok((
        Field::from_spectral(grid, dn).expect("length").into_physical(),
        Field::from_spectral(grid, dc).expect("length").into_physical(),
    ))
}

/// One IF-RK2 step of the full system.
pub fn step(state: &PksState, dt: f64, params: &ModelParams, flow: &FlowSpec) -> Result<PksState, SolverError> {
    Stepper::new(state.n.grid(), params, flow, Coupling::Chemotaxis)?.step(state, dt)
}

/// CFL-limited time step for `state`.
pub fn adaptive_dt(state: &PksState, params: &ModelParams, flow: &FlowSpec) -> Result<f64, SolverError> {
    let stepper = Stepper::new(state.n.grid(), params, flow, Coupling::Chemotaxis)?;
    stepper.check_state(state)?;
    let (_, _, stats) = stepper.explicit_terms(&state.n.coefficients(), &state.c.coefficients(), state.t)?;
    stepper.dt_from_stats(&stats)
}

/// Integrates the full system from `init` over `control.horizon`.
pub fn run(
    init: &PksState,
    params: &ModelParams,
    flow: &FlowSpec,
    control: &RunControl,
    sink: &mut dyn RunSink,
) -> Result<RunOutcome, SolverError> {
    Stepper::new(init.n.grid(), params, flow, Coupling::Chemotaxis)?.run(init, control, sink)
}

/// The `x`-averaged 2D system on `(y, z)`: no flow, optional injected
/// remainder flux (zero by default).
pub fn averaged2d_run(
    init: &PksState,
    params: &ModelParams,
    control: &RunControl,
    flux: Option<RemainderFlux>,
    sink: &mut dyn RunSink,
) -> Result<RunOutcome, SolverError> {
    if init.dim() != 2 {
        return Err(SolverError::State("averaged system needs 2D fields".into()));
    }
    Stepper::new(init.n.grid(), params, &FlowSpec::zero(), Coupling::Chemotaxis)?
        .with_flux(flux)
        .run(init, control, sink)
}

/// Remainder-norm time series of a passive-scalar run (rescaled time).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

impl DecaySeries {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.norms.iter().copied()).collect()
    }
}

/// One step of the passive scalar `∂_t f + u ∂_x f = A^{-1} Δ f`.
pub fn passive_step(f: &Field, t: f64, dt: f64, params: &ModelParams, flow: &FlowSpec) -> Result<Field, SolverError> {
    let stepper = Stepper::new(f.grid(), params, flow, Coupling::Passive)?;
    let state = PksState {
        t,
        n: f.clone(),
        c: Field::zeros(f.grid()),
    };
    Ok(stepper.step(&state, dt)?.n)
}

/// Runs the passive scalar and records `‖f_≠(t)‖₂` every `sample_every`.
pub fn passive_run(
    f_in: &Field,
    params: &ModelParams,
    flow: &FlowSpec,
    horizon: f64,
    sample_every: f64,
) -> Result<DecaySeries, SolverError> {
    struct Collect<'a>(&'a mut DecaySeries);
    impl RunSink for Collect<'_> {
        fn sample(&mut self, _v: &FunctionalValues) -> io::Result<()> {
            Ok(())
        }
        fn snapshot(&mut self, state: &PksState, _p: &ModelParams) -> io::Result<()> {
            self.0.times.push(state.t);
            self.0.norms.push(diagnostics::remainder_l2(&state.n));
            Ok(())
        }
    }
    let stepper = Stepper::new(f_in.grid(), params, flow, Coupling::Passive)?;
    let init = PksState::new(f_in.clone(), Field::zeros(f_in.grid()));
    let mut control = RunControl::new(horizon, horizon);
    control.snapshot_every = Some(sample_every);
    control.blowup_factor = f64::INFINITY;
    let mut series = DecaySeries::default();
    let outcome = stepper.run(&init, &control, &mut Collect(&mut series))?;
    if outcome.is_blow_up() {
        return Err(SolverError::StepDiverged {
            t: outcome.state().t,
        });
    }
    Ok(series)
}
