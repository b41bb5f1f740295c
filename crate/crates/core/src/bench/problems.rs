//! Initial data and the run driver for configured problems.

use crate::error::{Result, SolverError};
use crate::grid::{PhaseField, SpatialGrid, VelocityGrid};
use crate::moments::eval_maxwellian;
use crate::time_integration::{Solver, SolverState, StepReport};

use super::config::{PrimitiveState, ProblemConfig, ProblemKind, TwoStateInit};

/// Velocity-major field holding the Maxwellian of `state(x_i)` in every cell.
pub fn maxwellian_field<F>(spatial: &SpatialGrid, velocity: &VelocityGrid, mut state: F) -> Result<PhaseField>
where
    F: FnMut(f64) -> PrimitiveState,
{
    let n = spatial.n_cells;
    let mut values = vec![0.0; n * velocity.len()];
    for i in 0..n {
        let s = state(spatial.x(i));
        let m = eval_maxwellian(s.rho, s.u, s.temperature, velocity).map_err(|e| match e {
            SolverError::NonpositiveDensity { rho, .. } => SolverError::NonpositiveDensity { cell: i, rho },
            other => other,
        })?;
        for (j, f) in m.into_iter().enumerate() {
            values[j * n + i] = f;
        }
    }
    PhaseField::from_values(spatial.clone(), velocity.clone(), values)
}

/// Velocity of the smooth accuracy profile.
pub fn accuracy_velocity(sigma: f64, x: f64) -> f64 {
    ((-(sigma * x - 1.0).powi(2)).exp() - 2.0 * (-(sigma * x + 3.0).powi(2)).exp()) / sigma
}

pub fn init_accuracy(sigma: f64, spatial: &SpatialGrid, velocity: &VelocityGrid) -> Result<PhaseField> {
    if !(sigma > 0.0) {
        return Err(SolverError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    maxwellian_field(spatial, velocity, |x| PrimitiveState::new(1.0, [accuracy_velocity(sigma, x), 0.0, 0.0], 1.0))
}

pub fn init_two_state(init: &TwoStateInit, spatial: &SpatialGrid, velocity: &VelocityGrid) -> Result<PhaseField> {
    maxwellian_field(spatial, velocity, |x| if x <= init.x_jump { init.left } else { init.right })
}

pub fn init_riemann(spatial: &SpatialGrid, velocity: &VelocityGrid) -> Result<PhaseField> {
    let c = ProblemConfig::riemann(0.5, crate::time_integration::SchemeKind::FirstOrder);
    init_two_state(c.two_state.as_ref().expect("riemann states"), spatial, velocity)
}

pub fn init_lax(spatial: &SpatialGrid, velocity: &VelocityGrid) -> Result<PhaseField> {
    let c = ProblemConfig::lax(1e-3, crate::time_integration::SchemeKind::FirstOrder);
    init_two_state(c.two_state.as_ref().expect("lax states"), spatial, velocity)
}

pub fn initial_field(config: &ProblemConfig) -> Result<PhaseField> {
    config.validate()?;
    let spatial = config.spatial_grid()?;
    let velocity = config.velocity_grid()?;
    match config.problem {
        ProblemKind::Accuracy => init_accuracy(config.sigma, &spatial, &velocity),
        _ => init_two_state(config.two_state.as_ref().expect("validated"), &spatial, &velocity),
    }
}

pub fn build_solver(config: &ProblemConfig) -> Result<Solver> {
    config.validate()?;
    Solver::new(
        config.spatial_grid()?,
        config.velocity_grid()?,
        config.model_params()?,
        config.reconstruction,
        config.projection_mode(),
    )
}

/// Final state of a configured run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub dt: f64,
}

pub fn run_problem<F>(config: &ProblemConfig, observer: F) -> Result<RunOutput>
where
    F: FnMut(&SolverState, &StepReport),
{
    let solver = build_solver(config)?;
    let field = initial_field(config)?;
    let dt = config.time_step()?;
    let integrator = config.scheme.integrator(config.bdf_startup);
    let state = solver.run(field, &integrator, dt, config.t_final, observer)?;
    Ok(RunOutput { state, dt })
}

/// Navier-Stokes solution for a two-state problem on a grid `refine` times
/// finer, averaged back onto the problem grid.
#[derive(Debug, Clone)]
pub struct FluidReference {
    pub fine: crate::nse::FluidState,
    pub coeffs: crate::nse::TransportCoefficients,
    pub profiles: Vec<super::output::ProfileRow>,
}

pub fn nse_reference(config: &ProblemConfig, refine: usize) -> Result<FluidReference> {
    use crate::nse::{nse_run, restrict, FluidState, TransportCoefficients};
    config.validate()?;
    let init = config
        .two_state
        .as_ref()
        .ok_or_else(|| SolverError::InvalidParameter("the fluid reference needs a two-state problem".into()))?;
    if refine == 0 {
        return Err(SolverError::InvalidParameter("refinement factor must be positive".into()));
    }
    let coarse = config.spatial_grid()?;
    let grid = SpatialGrid::new(config.x_left, config.x_right, config.n_x * refine, config.bc)?;
    let coeffs = TransportCoefficients::new(config.nu, config.tau_law, config.dim)?;
    let state = nse_run(FluidState::two_state(grid, config.dim, config.epsilon, init)?, &coeffs, config.t_final)?;
    let fine_rows = super::output::fluid_profiles(&state, &coeffs);
    let avg = |f: fn(&super::output::ProfileRow) -> f64| restrict(&fine_rows.iter().map(f).collect::<Vec<_>>(), refine);
    let (rho, u1, t, q) = (avg(|r| r.rho), avg(|r| r.u1), avg(|r| r.temperature), avg(|r| r.heat_flux));
    let profiles = (0..coarse.n_cells)
        .map(|i| super::output::ProfileRow {
            x: coarse.x(i),
            rho: rho[i],
            u1: u1[i],
            temperature: t[i],
            heat_flux: q[i],
        })
        .collect();
    Ok(FluidReference { fine: state, coeffs, profiles })
}
