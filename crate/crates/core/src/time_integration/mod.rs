//! Full time steps: semi-Lagrangian transport of every velocity row to the
//! characteristic feet, followed by the implicit relaxation of
//! [`crate::relaxation`].

mod ledger;
mod tableau;

pub use ledger::{field_totals, ConservationLedger, Invariants};
pub use tableau::{BdfScheme, BdfStartup, DirkTableau, DIRK2_GAMMA, DIRK3_GAMMA};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::{PhaseField, SpatialGrid, VelocityGrid};
use crate::moments::ModelParams;
use crate::reconstruction::{Reconstruction, ReconstructionKind};
use crate::relaxation::{CellStage, ProjectionMode, Relaxation, StageResult};

/// Integrators selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    FirstOrder,
    Dirk2,
    Dirk3,
    Bdf2,
    Bdf3,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [Self::FirstOrder, Self::Dirk2, Self::Dirk3, Self::Bdf2, Self::Bdf3];

    /// Reconstruction paired with the scheme by default.
    pub fn default_reconstruction(self) -> ReconstructionKind {
        match self {
            Self::FirstOrder => ReconstructionKind::Linear,
            Self::Dirk2 | Self::Bdf2 => ReconstructionKind::Qcweno23,
            Self::Dirk3 | Self::Bdf3 => ReconstructionKind::Qcweno35,
        }
    }

    pub fn integrator(self, startup: BdfStartup) -> Integrator {
        match self {
            Self::FirstOrder => Integrator::FirstOrder,
            Self::Dirk2 => Integrator::Dirk(DirkTableau::dirk2()),
            Self::Dirk3 => Integrator::Dirk(DirkTableau::dirk3()),
            Self::Bdf2 => Integrator::Bdf(BdfScheme::bdf2().with_startup(startup)),
            Self::Bdf3 => Integrator::Bdf(BdfScheme::bdf3().with_startup(startup)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FirstOrder => "first_order",
            Self::Dirk2 => "dirk2",
            Self::Dirk3 => "dirk3",
            Self::Bdf2 => "bdf2",
            Self::Bdf3 => "bdf3",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = SolverError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .or(match s.to_ascii_lowercase().as_str() {
                "fo" => Some(Self::FirstOrder),
                "rk2" => Some(Self::Dirk2),
                "rk3" => Some(Self::Dirk3),
                _ => None,
            })
            .ok_or_else(|| SolverError::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Integrator {
    /// Implicit Euler with linear interpolation at the feet.
    FirstOrder,
    Dirk(DirkTableau),
    Bdf(BdfScheme),
}

/// Field, history of past fields (newest first) and conservation ledger.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub field: PhaseField,
    pub history: Vec<Vec<f64>>,
    /// Step size separating the history entries.
    pub history_dt: Option<f64>,
    /// Number of past fields retained.
    pub history_depth: usize,
    pub step: usize,
    pub ledger: ConservationLedger,
}

impl SolverState {
    pub fn new(field: PhaseField) -> Self {
        let totals = field_totals(&field.values, field.n_cells(), &field.velocity, field.spatial.dx);
        Self {
            field,
            history: Vec::new(),
            history_dt: None,
            history_depth: 0,
            step: 0,
            ledger: ConservationLedger::new(totals),
        }
    }

    pub fn with_history_depth(mut self, depth: usize) -> Self {
        self.history_depth = depth;
        self
    }

    pub fn time(&self) -> f64 {
        self.field.time
    }

    /// Accepts `values` as the field at `t + dt`, rotating the history.
    fn advance(&mut self, values: Vec<f64>, dt: f64, reference: Invariants) {
        let f = &mut self.field;
        let old = std::mem::replace(&mut f.values, values);
        if self.history_depth > 0 {
            if self.history_dt != Some(dt) {
                self.history.clear();
            }
            self.history.insert(0, old);
            self.history.truncate(self.history_depth);
            self.history_dt = Some(dt);
        }
        f.time += dt;
        self.step += 1;
        let totals = field_totals(&f.values, f.n_cells(), &f.velocity, f.spatial.dx);
        self.ledger.push(totals, reference);
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    pub dt: f64,
    /// `||f^n||_inf` before the step.
    pub previous_max: f64,
    /// `||G_hat||_inf` of the final stage.
    pub gaussian_max: f64,
    pub new_min: f64,
    pub new_max: f64,
    /// Largest projection residual over all stages.
    pub projection_residual: f64,
    /// Per-cell data of the final stage.
    pub cells: Vec<CellStage>,
    /// Label of the integrator that produced the step.
    pub method: &'static str,
}

impl StepReport {
    /// `max_i ||T_eff - T~ I||_inf` of the final stage.
    pub fn tensor_deviation(&self) -> f64 {
        StageResult::deviation_of(&self.cells)
    }
}

/// Transport plus relaxation on fixed grids.
#[derive(Debug, Clone)]
pub struct Solver {
    pub spatial: SpatialGrid,
    pub relaxation: Relaxation,
    pub reconstruction: Reconstruction,
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values
        .par_iter()
        .fold(|| (f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

impl Solver {
    pub fn new(spatial: SpatialGrid, velocity: VelocityGrid, params: ModelParams, kind: ReconstructionKind, projection: ProjectionMode) -> Result<Self> {
        let reconstruction = Reconstruction::new(kind, spatial.dx);
        let relaxation = Relaxation::new(velocity, params, projection)?;
        Ok(Self {
            spatial,
            relaxation,
            reconstruction,
        })
    }

    pub fn velocity(&self) -> &VelocityGrid {
        &self.relaxation.vgrid
    }

    pub fn params(&self) -> &ModelParams {
        &self.relaxation.params
    }

    fn check_field(&self, field: &PhaseField) -> Result<()> {
        if field.spatial != self.spatial || field.velocity != *self.velocity() {
            return Err(SolverError::InvalidGrid("field grids differ from the solver grids".into()));
        }
        Ok(())
    }

    /// `out (+)= coef R[src](x - v_1 time_shift)` for every velocity row.
    fn transport(&self, rec: &Reconstruction, src: &[f64], time_shift: f64, coef: f64, out: &mut [f64], accumulate: bool) -> Result<()> {
        let n = self.spatial.n_cells;
        let dx = self.spatial.dx;
        let bc = self.spatial.bc;
        let nodes = self.velocity().nodes();
        out.par_chunks_mut(n).zip(src.par_chunks(n)).zip(nodes.par_iter()).try_for_each_init(
            || (Vec::new(), vec![0.0; n]),
            |(scratch, tmp), ((o, s), v)| {
                rec.shift_row(s, bc, v[0] * time_shift / dx, scratch, tmp)?;
                if accumulate {
                    o.iter_mut().zip(tmp.iter()).for_each(|(o, t)| *o += coef * t);
                } else {
                    o.iter_mut().zip(tmp.iter()).for_each(|(o, t)| *o = coef * t);
                }
                Ok(())
            },
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        state: &mut SolverState,
        last: StageResult,
        values_dt: f64,
        reference: Invariants,
        previous_max: f64,
        residual: f64,
        method: &'static str,
    ) -> StepReport {
        let (new_min, new_max) = extrema(&last.values);
        let gaussian_max = last.gaussian_max;
        let cells = last.cells;
        state.advance(last.values, values_dt, reference);
        StepReport {
            step: state.step,
            dt: values_dt,
            previous_max,
            gaussian_max,
            new_min,
            new_max,
            projection_residual: residual,
            cells,
            method,
        }
    }

    /// Implicit Euler with linear interpolation at the feet.
    pub fn step_first_order(&self, state: &mut SolverState, dt: f64) -> Result<StepReport> {
        let linear = Reconstruction::with_eps(ReconstructionKind::Linear, self.reconstruction.smoothness_eps);
        self.dirk_with(state, &DirkTableau::first_order(), dt, &linear, "first_order")
    }

    /// Stiffly accurate DIRK step with the solver's reconstruction.
    pub fn step_dirk(&self, state: &mut SolverState, tableau: &DirkTableau, dt: f64) -> Result<StepReport> {
        self.dirk_with(state, tableau, dt, &self.reconstruction, tableau.label)
    }

    fn dirk_with(&self, state: &mut SolverState, tableau: &DirkTableau, dt: f64, rec: &Reconstruction, method: &'static str) -> Result<StepReport> {
        self.check_field(&state.field)?;
        check_dt(dt)?;
        let n = self.spatial.n_cells;
        let eps = self.params().epsilon;
        let fn_ = &state.field.values;
        let previous_max = state.field.sup_norm();
        let s = tableau.stages();
        let mut qs: Vec<Vec<f64>> = Vec::with_capacity(s - 1);
        let mut ft = vec![0.0; fn_.len()];
        let mut residual = 0.0_f64;
        let mut last = None;
        for k in 0..s {
            let ck = tableau.c[k];
            self.transport(rec, fn_, ck * dt, 1.0, &mut ft, false)?;
            for (l, q) in qs.iter().enumerate() {
                let a = tableau.a[k][l];
                if a != 0.0 {
                    self.transport(rec, q, (ck - tableau.c[l]) * dt, a * dt / eps, &mut ft, true)?;
                }
            }
            let stage = self.relaxation.stage(&ft, n, tableau.a[k][k] * dt, k + 1 < s)?;
            residual = residual.max(stage.projection_residual);
            if k + 1 < s {
                qs.push(stage.relaxation.expect("relaxation term requested"));
            } else {
                last = Some(stage);
            }
        }
        let reference = state.ledger.last();
        Ok(self.finish(state, last.expect("at least one stage"), dt, reference, previous_max, residual, method))
    }

    /// `s`-step BDF step; the history must hold `s - 1` fields spaced by `dt`.
    pub fn step_bdf(&self, state: &mut SolverState, scheme: &BdfScheme, dt: f64) -> Result<StepReport> {
        self.check_field(&state.field)?;
        check_dt(dt)?;
        let s = scheme.steps();
        let available = if state.history_dt == Some(dt) { state.history.len() } else { 0 };
        if available + 1 < s {
            return Err(SolverError::InsufficientHistory { needed: s - 1, available });
        }
        let n = self.spatial.n_cells;
        let previous_max = state.field.sup_norm();
        let mut ft = vec![0.0; state.field.values.len()];
        for (k, alpha) in scheme.alpha.iter().enumerate() {
            let src = if k == 0 { &state.field.values } else { &state.history[k - 1] };
            self.transport(&self.reconstruction, src, (k + 1) as f64 * dt, *alpha, &mut ft, k > 0)?;
        }
        let stage = self.relaxation.stage(&ft, n, scheme.beta * dt, false)?;
        let residual = stage.projection_residual;
        let reference = state.ledger.combination(&scheme.alpha);
        Ok(self.finish(state, stage, dt, reference, previous_max, residual, "bdf"))
    }

    /// Advances `state` by one step of `integrator`, falling back to the
    /// startup tableau while a BDF history is incomplete.
    pub fn step(&self, state: &mut SolverState, integrator: &Integrator, dt: f64) -> Result<StepReport> {
        match integrator {
            Integrator::FirstOrder => self.step_first_order(state, dt),
            Integrator::Dirk(t) => self.step_dirk(state, t, dt),
            Integrator::Bdf(b) => {
                state.history_depth = state.history_depth.max(b.steps() - 1);
                let ready = state.history_dt == Some(dt) && state.history.len() + 1 >= b.steps();
                if ready {
                    self.step_bdf(state, b, dt)
                } else {
                    let t = b.startup_tableau();
                    self.step_dirk(state, &t, dt)
                }
            }
        }
    }

    /// Integrates from `field.time` to `t_final` with step `dt`, shortening the
    /// last step to land on `t_final`. `observer` sees every accepted step.
    pub fn run<F>(&self, field: PhaseField, integrator: &Integrator, dt: f64, t_final: f64, mut observer: F) -> Result<SolverState>
    where
        F: FnMut(&SolverState, &StepReport),
    {
        check_dt(dt)?;
        let mut state = SolverState::new(field);
        let t0 = state.time();
        let span = t_final - t0;
        if !(span >= 0.0) {
            return Err(SolverError::InvalidParameter(format!("final time {t_final} precedes the initial time {t0}")));
        }
        let n_steps = step_count(span, dt);
        for n in 0..n_steps {
            let t = state.time();
            let mut h = if n + 1 == n_steps { t0 + span - t } else { dt };
            if (h - dt).abs() <= 1e-12 * dt {
                h = dt;
            }
            let report = self.step(&mut state, integrator, h).map_err(|e| e.at_step(n + 1, t))?;
            observer(&state, &report);
        }
        Ok(state)
    }
}

/// Steps needed to cover `span` with steps of at most `dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    (span / dt - 1e-9).ceil().max(1.0) as usize
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}
