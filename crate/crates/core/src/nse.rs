//! One-dimensional compressible Navier-Stokes reference with the transport
//! coefficients implied by the ES-BGK model.
//!
//! Finite volumes on the kinetic spatial grid: minmod-limited MUSCL states in
//! primitive variables, a Rusanov convective flux, central dissipative fluxes
//! scaled by `epsilon`, and the two-stage SSP Runge-Kutta method.

use serde::{Deserialize, Serialize};

use crate::bench::config::{PrimitiveState, TwoStateInit};
use crate::error::{Result, SolverError};
use crate::grid::{Boundary, SpatialGrid};
use crate::moments::TauLaw;

/// Viscosity and heat conductivity derived from `(nu, tau)`:
/// `mu = p / ((1 - nu) tau)`, `kappa = (d + 2)/2 p / tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportCoefficients {
    pub nu: f64,
    pub tau_law: TauLaw,
    pub dim: usize,
}

impl TransportCoefficients {
    pub fn new(nu: f64, tau_law: TauLaw, dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(SolverError::InvalidParameter(format!("dimension {dim} unsupported")));
        }
        if !(nu < 1.0) {
            return Err(SolverError::InvalidParameter(format!("nu must be below one, got {nu}")));
        }
        Ok(Self { nu, tau_law, dim })
    }

    pub fn viscosity(&self, rho: f64, temperature: f64) -> f64 {
        rho * temperature / ((1.0 - self.nu) * self.tau_law.eval(rho, temperature))
    }

    pub fn conductivity(&self, rho: f64, temperature: f64) -> f64 {
        0.5 * (self.dim as f64 + 2.0) * rho * temperature / self.tau_law.eval(rho, temperature)
    }

    /// `((d + 2)/2) mu / kappa`, independent of the state.
    pub fn prandtl(&self) -> f64 {
        let (rho, t) = (1.0, 1.0);
        0.5 * (self.dim as f64 + 2.0) * self.viscosity(rho, t) / self.conductivity(rho, t)
    }

    pub fn gamma(&self) -> f64 {
        (self.dim as f64 + 2.0) / self.dim as f64
    }
}

/// Conserved variables `(rho, rho u, E)` per cell, `E = (d/2) rho T + rho u^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub grid: SpatialGrid,
    pub dim: usize,
    pub epsilon: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub time: f64,
}

/// Primitive values of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub temperature: f64,
}

impl FluidState {
    pub fn from_primitive<F>(grid: SpatialGrid, dim: usize, epsilon: f64, mut state: F) -> Result<Self>
    where
        F: FnMut(f64) -> PrimitiveState,
    {
        if !(epsilon >= 0.0) {
            return Err(SolverError::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        let n = grid.n_cells;
        let (mut rho, mut momentum, mut energy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let s = state(grid.x(i));
            if !(s.rho > 0.0 && s.temperature > 0.0) {
                return Err(SolverError::FluidVacuum { cell: i });
            }
            rho.push(s.rho);
            momentum.push(s.rho * s.u[0]);
            energy.push(0.5 * dim as f64 * s.rho * s.temperature + 0.5 * s.rho * s.u[0] * s.u[0]);
        }
        Ok(Self {
            grid,
            dim,
            epsilon,
            rho,
            momentum,
            energy,
            time: 0.0,
        })
    }

    pub fn two_state(grid: SpatialGrid, dim: usize, epsilon: f64, init: &TwoStateInit) -> Result<Self> {
        Self::from_primitive(grid, dim, epsilon, |x| if x <= init.x_jump { init.left } else { init.right })
    }

    pub fn primitive(&self, i: usize) -> Primitive {
        let rho = self.rho[i];
        let u = self.momentum[i] / rho;
        let internal = self.energy[i] - 0.5 * rho * u * u;
        Primitive {
            rho,
            u,
            temperature: internal / (0.5 * self.dim as f64 * rho),
        }
    }

    pub fn check(&self) -> Result<()> {
        for i in 0..self.rho.len() {
            let p = self.primitive(i);
            if !(p.rho > 0.0 && p.temperature > 0.0) || !p.u.is_finite() {
                return Err(SolverError::FluidVacuum { cell: i });
            }
        }
        Ok(())
    }

    /// `(sum rho, sum rho u, sum E) dx`
    pub fn totals(&self) -> [f64; 3] {
        let dx = self.grid.dx;
        [
            self.rho.iter().sum::<f64>() * dx,
            self.momentum.iter().sum::<f64>() * dx,
            self.energy.iter().sum::<f64>() * dx,
        ]
    }

    pub fn temperatures(&self) -> Vec<f64> {
        (0..self.rho.len()).map(|i| self.primitive(i).temperature).collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.rho.len()).map(|i| self.primitive(i).u).collect()
    }

    /// Heat flux `-epsilon kappa dT/dx` by central differences.
    pub fn heat_flux(&self, coeffs: &TransportCoefficients) -> Vec<f64> {
        let n = self.rho.len();
        let t = self.temperatures();
        (0..n)
            .map(|i| {
                let (l, r) = neighbours(i, n, self.grid.bc);
                let denom = (r as f64 - l as f64) * self.grid.dx;
                let grad = if denom > 0.0 { (t[r] - t[l]) / denom } else { 0.0 };
                -self.epsilon * coeffs.conductivity(self.rho[i], t[i]) * grad
            })
            .collect()
    }
}

fn neighbours(i: usize, n: usize, bc: Boundary) -> (usize, usize) {
    match bc {
        Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
        Boundary::FreeFlow => (i.saturating_sub(1), (i + 1).min(n - 1)),
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

const GHOSTS: usize = 2;

fn padded(values: &[f64], bc: Boundary) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n + 2 * GHOSTS];
    crate::grid::extend_row(values, GHOSTS, bc, &mut out);
    out
}

/// Largest explicit step allowed by advection and diffusion.
pub fn stable_time_step(state: &FluidState, coeffs: &TransportCoefficients, cfl: f64) -> f64 {
    let gamma = coeffs.gamma();
    let dx = state.grid.dx;
    let d = state.dim as f64;
    let mut s_max = 0.0_f64;
    let mut diff_max = 0.0_f64;
    for i in 0..state.rho.len() {
        let p = state.primitive(i);
        let c = (gamma * p.temperature).sqrt();
        s_max = s_max.max(p.u.abs() + c);
        let visc = (2.0 - 2.0 / d) * coeffs.viscosity(p.rho, p.temperature) / p.rho;
        let cond = coeffs.conductivity(p.rho, p.temperature) / (0.5 * d * p.rho);
        diff_max = diff_max.max(state.epsilon * visc.max(cond));
    }
    let adv = cfl * dx / s_max;
    if diff_max > 0.0 {
        adv.min(cfl * dx * dx / (2.0 * diff_max))
    } else {
        adv
    }
}

/// Right-hand side `-(F_{i+1/2} - F_{i-1/2}) / dx`.
fn rhs(state: &FluidState, coeffs: &TransportCoefficients) -> Result<[Vec<f64>; 3]> {
    state.check()?;
    let n = state.rho.len();
    let bc = state.grid.bc;
    let dx = state.grid.dx;
    let d = state.dim as f64;
    let gamma = coeffs.gamma();
    let prim: Vec<Primitive> = (0..n).map(|i| state.primitive(i)).collect();
    let rho = padded(&prim.iter().map(|p| p.rho).collect::<Vec<_>>(), bc);
    let u = padded(&prim.iter().map(|p| p.u).collect::<Vec<_>>(), bc);
    let pr = padded(&prim.iter().map(|p| p.rho * p.temperature).collect::<Vec<_>>(), bc);
    let t = padded(&prim.iter().map(|p| p.temperature).collect::<Vec<_>>(), bc);

    // limited slopes on cells -1..=n (padded indices 1..=n+2)
    let slope = |v: &[f64], k: usize| minmod(v[k] - v[k - 1], v[k + 1] - v[k]);
    let flux_of = |r: f64, u: f64, p: f64| {
        let e = p / (gamma - 1.0) + 0.5 * r * u * u;
        ([r, r * u, e], [r * u, r * u * u + p, (e + p) * u])
    };
    let mut flux = [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]];
    for f in 0..=n {
        // face between padded cells kl = f + 1 and kr = f + 2
        let (kl, kr) = (f + GHOSTS - 1, f + GHOSTS);
        let left = [rho[kl] + 0.5 * slope(&rho, kl), u[kl] + 0.5 * slope(&u, kl), pr[kl] + 0.5 * slope(&pr, kl)];
        let right = [rho[kr] - 0.5 * slope(&rho, kr), u[kr] - 0.5 * slope(&u, kr), pr[kr] - 0.5 * slope(&pr, kr)];
        if !(left[0] > 0.0 && left[2] > 0.0 && right[0] > 0.0 && right[2] > 0.0) {
            return Err(SolverError::FluidVacuum { cell: f.min(n - 1) });
        }
        let (ql, fl) = flux_of(left[0], left[1], left[2]);
        let (qr, fr) = flux_of(right[0], right[1], right[2]);
        let speed = (left[1].abs() + (gamma * left[2] / left[0]).sqrt()).max(right[1].abs() + (gamma * right[2] / right[0]).sqrt());
        // dissipative fluxes
        let (rl, rr) = (rho[kl], rho[kr]);
        let (tl, tr) = (t[kl], t[kr]);
        let mu = 0.5 * (coeffs.viscosity(rl, tl) + coeffs.viscosity(rr, tr));
        let kappa = 0.5 * (coeffs.conductivity(rl, tl) + coeffs.conductivity(rr, tr));
        let shear = (2.0 - 2.0 / d) * (u[kr] - u[kl]) / dx;
        let grad_t = (tr - tl) / dx;
        let u_face = 0.5 * (u[kl] + u[kr]);
        let eps = state.epsilon;
        let visc = [0.0, eps * mu * shear, eps * (mu * shear * u_face + kappa * grad_t)];
        for c in 0..3 {
            flux[c][f] = 0.5 * (fl[c] + fr[c]) - 0.5 * speed * (qr[c] - ql[c]) - visc[c];
        }
    }
    Ok(flux.map(|fc| (0..n).map(|i| -(fc[i + 1] - fc[i]) / dx).collect()))
}

fn euler_update(base: &FluidState, from: &FluidState, coeffs: &TransportCoefficients, dt: f64) -> Result<FluidState> {
    let k = rhs(from, coeffs)?;
    let mut out = base.clone();
    for i in 0..out.rho.len() {
        out.rho[i] = from.rho[i] + dt * k[0][i];
        out.momentum[i] = from.momentum[i] + dt * k[1][i];
        out.energy[i] = from.energy[i] + dt * k[2][i];
    }
    Ok(out)
}

/// One SSP-RK2 step.
pub fn nse_step(state: &FluidState, dt: f64, coeffs: &TransportCoefficients) -> Result<FluidState> {
    if coeffs.dim != state.dim {
        return Err(SolverError::InvalidParameter("coefficient and state dimensions differ".into()));
    }
    let stage = euler_update(state, state, coeffs, dt)?;
    let second = euler_update(state, &stage, coeffs, dt)?;
    let mut out = state.clone();
    for i in 0..out.rho.len() {
        out.rho[i] = 0.5 * (state.rho[i] + second.rho[i]);
        out.momentum[i] = 0.5 * (state.momentum[i] + second.momentum[i]);
        out.energy[i] = 0.5 * (state.energy[i] + second.energy[i]);
    }
    out.time = state.time + dt;
    out.check()?;
    Ok(out)
}

/// CFL number used by [`nse_run`].
pub const NSE_CFL: f64 = 0.4;

/// Advances to `t_final` with automatically chosen stable steps.
pub fn nse_run(mut state: FluidState, coeffs: &TransportCoefficients, t_final: f64) -> Result<FluidState> {
    let mut step = 0;
    while state.time < t_final {
        let dt = stable_time_step(&state, coeffs, NSE_CFL).min(t_final - state.time);
        let t = state.time;
        state = nse_step(&state, dt, coeffs).map_err(|e| e.at_step(step + 1, t))?;
        if t_final - state.time <= 1e-14 * t_final.max(1.0) {
            state.time = t_final;
        }
        step += 1;
    }
    Ok(state)
}

/// Cell averages of `fine` over groups of `factor` cells.
pub fn restrict(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}
