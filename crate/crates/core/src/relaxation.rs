//! Implicit relaxation shared by every integrator.
//!
//! Moments are invariant under the relaxation operator, so the implicit stage
//! `f = f~ + (a dt / eps) tau (G[f] - f)` needs no nonlinear solver: the new
//! density, velocity and temperature equal the transported ones, and the
//! second moment obeys a linear update whose closed form gives the modified
//! parameter `nu'` below. The stage then reduces to a pointwise convex
//! combination of the transported data and the projected Gaussian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::VelocityGrid;
use crate::moments::{compute_moments_at, GaussianShape, ModelParams, MomentSet, RawMoments, RelaxationTensor, Tensor};
use crate::projection::{projection_weights, ConstraintSystem, WeightKind, MAX_INVARIANTS, WEIGHT_FLOOR};

/// Implicit weight of a stage: `a_kk dt` (DIRK), `beta_s dt` (BDF) or `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageContext {
    pub a_dt: f64,
    pub epsilon: f64,
}

impl StageContext {
    pub fn new(a_dt: f64, epsilon: f64) -> Result<Self> {
        if !(a_dt >= 0.0 && a_dt.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("stage weight must be nonnegative, got {a_dt}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { a_dt, epsilon })
    }

    /// Weight of the Gaussian in the convex update, `tau a dt / (eps + tau a dt)`.
    #[inline]
    pub fn gaussian_weight(&self, tau: f64) -> f64 {
        let s = tau * self.a_dt;
        s / (self.epsilon + s)
    }
}

/// Moments of the transported data; the heat flux is not needed here.
pub fn transported_moments(values: &[f64], vgrid: &VelocityGrid) -> Result<MomentSet> {
    transported_moments_at(values, vgrid, 0)
}

fn transported_moments_at(values: &[f64], vgrid: &VelocityGrid, cell: usize) -> Result<MomentSet> {
    let m = compute_moments_at(values, vgrid, cell)?;
    check_temperature(&m, cell)?;
    Ok(m)
}

fn check_temperature(m: &MomentSet, cell: usize) -> Result<()> {
    if !(m.temperature > 0.0) {
        return Err(SolverError::NonpositiveTemperature {
            cell,
            temperature: m.temperature,
        });
    }
    Ok(())
}

/// `nu' = eps nu / (eps + (1 - nu) tau a dt)`
#[inline]
pub fn modified_nu(nu: f64, epsilon: f64, tau: f64, a_dt: f64) -> f64 {
    epsilon * nu / (epsilon + (1.0 - nu) * tau * a_dt)
}

/// `(1 - nu') T I + nu' (Sigma / rho - U (x) U)`, checked for positive definiteness.
pub fn effective_tensor(temperature: f64, nu_prime: f64, sigma: &Tensor, rho: f64, u: &[f64; 3]) -> Result<RelaxationTensor> {
    effective_tensor_at(temperature, nu_prime, sigma, rho, u, 0)
}

fn effective_tensor_at(temperature: f64, nu_prime: f64, sigma: &Tensor, rho: f64, u: &[f64; 3], cell: usize) -> Result<RelaxationTensor> {
    if !(rho > 0.0) {
        return Err(SolverError::NonpositiveDensity { cell, rho });
    }
    if !(temperature > 0.0) {
        return Err(SolverError::NonpositiveTemperature { cell, temperature });
    }
    let dim = sigma.dim;
    let theta = sigma.scale(1.0 / rho).sub(&Tensor::outer(dim, u));
    let t = Tensor::identity(dim).scale((1.0 - nu_prime) * temperature).add(&theta.scale(nu_prime));
    RelaxationTensor::new(t, cell)
}

/// Convex combination `(eps f~ + tau a dt G) / (eps + tau a dt)`.
///
/// Written as `f~ + w (G - f~)` and clamped to the interval spanned by the two
/// endpoints, where the exact value lies, so the maximum principle also holds
/// in floating point.
#[inline]
pub fn convex_update(transported: f64, gaussian: f64, w: f64) -> f64 {
    let v = transported + w * (gaussian - transported);
    let (lo, hi) = if transported <= gaussian {
        (transported, gaussian)
    } else {
        (gaussian, transported)
    };
    v.clamp(lo, hi)
}

pub fn implicit_stage_update(transported: &[f64], gaussian: &[f64], tau: f64, ctx: &StageContext) -> Vec<f64> {
    let w = ctx.gaussian_weight(tau);
    transported.iter().zip(gaussian).map(|(f, g)| convex_update(*f, *g, w)).collect()
}

/// `Q = tau (G - f)`
pub fn relaxation_term(f: &[f64], gaussian: &[f64], tau: f64) -> Vec<f64> {
    f.iter().zip(gaussian).map(|(f, g)| tau * (g - f)).collect()
}

/// Whether the discrete Gaussian is corrected before use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    Off,
    /// Weighted projection with the given weights.
    On(WeightKind),
}

impl ProjectionMode {
    pub fn is_on(&self) -> bool {
        matches!(self, ProjectionMode::On(_))
    }
}

/// Per-cell record of one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStage {
    pub moments: MomentSet,
    pub tau: f64,
    pub nu_prime: f64,
    pub tensor: Tensor,
}

/// Output of a field-level stage.
#[derive(Debug, Clone)]
pub struct StageResult {
    /// Stage solution, velocity-major like the input.
    pub values: Vec<f64>,
    /// `tau (G_hat - f)` on the grid, when requested.
    pub relaxation: Option<Vec<f64>>,
    pub cells: Vec<CellStage>,
    /// `max |G_hat|` over the field.
    pub gaussian_max: f64,
    /// Largest constraint residual of the (projected) Gaussian over cells.
    pub projection_residual: f64,
}

impl StageResult {
    /// `max_i ||T_eff - T~ I||_inf`
    pub fn tensor_deviation(&self) -> f64 {
        Self::deviation_of(&self.cells)
    }

    pub fn deviation_of(cells: &[CellStage]) -> f64 {
        cells
            .iter()
            .map(|c| {
                let iso = Tensor::identity(c.tensor.dim).scale(c.moments.temperature);
                c.tensor.sub(&iso).max_abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Number of spatial cells handled together by one worker in cell-wise sweeps.
const CELL_BLOCK: usize = 16;

/// Stage relaxation on a whole phase-space field.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub vgrid: VelocityGrid,
    pub params: ModelParams,
    pub projection: ProjectionMode,
}

/// Per-node invariant functions `(1, v, |v|^2/2)`.
fn node_invariants(vgrid: &VelocityGrid) -> Vec<[f64; MAX_INVARIANTS]> {
    let d = vgrid.dim;
    vgrid
        .nodes()
        .iter()
        .map(|v| {
            let mut p = [0.0; MAX_INVARIANTS];
            p[0] = 1.0;
            p[1..=d].copy_from_slice(&v[..d]);
            p[d + 1] = 0.5 * v[..d].iter().map(|x| x * x).sum::<f64>();
            p
        })
        .collect()
}

/// Per-cell raw moments of a velocity-major field, in a fixed summation order.
pub fn field_raw_moments(values: &[f64], n_cells: usize, vgrid: &VelocityGrid) -> Vec<RawMoments> {
    let dim = vgrid.dim;
    let nodes = vgrid.nodes();
    let w = vgrid.cell_volume();
    let blocks: Vec<usize> = (0..n_cells).step_by(CELL_BLOCK).collect();
    blocks
        .par_iter()
        .flat_map_iter(|&start| {
            let end = (start + CELL_BLOCK).min(n_cells);
            let mut acc = vec![RawMoments::zeros(dim); end - start];
            for (j, v) in nodes.iter().enumerate() {
                let row = &values[j * n_cells + start..j * n_cells + end];
                for (r, &f) in acc.iter_mut().zip(row) {
                    r.mass += f;
                    for a in 0..dim {
                        let fva = f * v[a];
                        r.momentum[a] += fva;
                        for b in a..dim {
                            r.second.m[a][b] += fva * v[b];
                        }
                    }
                }
            }
            acc.into_iter().map(move |r| r.finish(w))
        })
        .collect()
}

/// Per-cell invariant sums `sum_j phi_j f_j dv^d`.
fn field_invariants(values: &[f64], n_cells: usize, phi: &[[f64; MAX_INVARIANTS]], k: usize, w: f64) -> Vec<[f64; MAX_INVARIANTS]> {
    let blocks: Vec<usize> = (0..n_cells).step_by(CELL_BLOCK).collect();
    blocks
        .par_iter()
        .flat_map_iter(|&start| {
            let end = (start + CELL_BLOCK).min(n_cells);
            let mut acc = vec![[0.0; MAX_INVARIANTS]; end - start];
            for (j, p) in phi.iter().enumerate() {
                let row = &values[j * n_cells + start..j * n_cells + end];
                for (m, &f) in acc.iter_mut().zip(row) {
                    for a in 0..k {
                        m[a] += f * p[a];
                    }
                }
            }
            acc.into_iter().map(move |mut m| {
                m.iter_mut().for_each(|x| *x *= w);
                m
            })
        })
        .collect()
}

/// Per-cell gram matrices `sum_j G_j phi_j phi_j^T dv^{2d}` for locally
/// weighted projection (`omega_j^2 = G_j`).
fn field_local_grams(g: &[f64], n_cells: usize, phi: &[[f64; MAX_INVARIANTS]], k: usize, w: f64) -> Vec<nalgebra::DMatrix<f64>> {
    let blocks: Vec<usize> = (0..n_cells).step_by(CELL_BLOCK).collect();
    blocks
        .par_iter()
        .flat_map_iter(|&start| {
            let end = (start + CELL_BLOCK).min(n_cells);
            let mut acc = vec![[[0.0; MAX_INVARIANTS]; MAX_INVARIANTS]; end - start];
            for (j, p) in phi.iter().enumerate() {
                let row = &g[j * n_cells + start..j * n_cells + end];
                for (m, &gj) in acc.iter_mut().zip(row) {
                    for a in 0..k {
                        let ga = gj * p[a];
                        for b in a..k {
                            m[a][b] += ga * p[b];
                        }
                    }
                }
            }
            acc.into_iter()
                .map(move |m| nalgebra::DMatrix::from_fn(k, k, |a, b| m[a.min(b)][a.max(b)] * w * w))
        })
        .collect()
}

impl Relaxation {
    pub fn new(vgrid: VelocityGrid, params: ModelParams, projection: ProjectionMode) -> Result<Self> {
        params.validate(vgrid.dim)?;
        Ok(Self { vgrid, params, projection })
    }

    fn cell_stage(&self, raw: &RawMoments, cell: usize, ctx: &StageContext) -> Result<CellStage> {
        let moments = MomentSet::from_raw(raw, cell)?;
        check_temperature(&moments, cell)?;
        let tau = self.params.tau_law.eval(moments.rho, moments.temperature);
        let nu_prime = modified_nu(self.params.nu, ctx.epsilon, tau, ctx.a_dt);
        let t = effective_tensor_at(moments.temperature, nu_prime, &moments.sigma, moments.rho, &moments.u, cell)?;
        Ok(CellStage {
            moments,
            tau,
            nu_prime,
            tensor: t.tensor,
        })
    }

    /// Relaxes transported data `ft` (velocity-major, `n_cells` per row) with
    /// implicit weight `a_dt`.
    pub fn stage(&self, ft: &[f64], n_cells: usize, a_dt: f64, want_relaxation: bool) -> Result<StageResult> {
        let vgrid = &self.vgrid;
        let n_nodes = vgrid.len();
        if ft.len() != n_nodes * n_cells {
            return Err(SolverError::InvalidParameter("field size does not match the grids".into()));
        }
        let ctx = StageContext::new(a_dt, self.params.epsilon)?;
        let dim = vgrid.dim;
        let k = dim + 2;
        let dv = vgrid.cell_volume();

        let raw = field_raw_moments(ft, n_cells, vgrid);
        let cells: Vec<CellStage> = raw.par_iter().enumerate().map(|(i, r)| self.cell_stage(r, i, &ctx)).collect::<Result<_>>()?;
        let shapes: Vec<GaussianShape> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let t = RelaxationTensor::new(c.tensor, i)?;
                Ok(GaussianShape::new(c.moments.rho, c.moments.u, &t))
            })
            .collect::<Result<_>>()?;

        // Discrete Gaussians, row by row.
        let nodes = vgrid.nodes();
        let mut g = vec![0.0; ft.len()];
        g.par_chunks_mut(n_cells).zip(nodes.par_iter()).for_each(|(row, v)| {
            for (x, s) in row.iter_mut().zip(&shapes) {
                *x = s.eval(v);
            }
        });

        let phi = node_invariants(vgrid);
        let targets: Vec<[f64; MAX_INVARIANTS]> = raw
            .iter()
            .map(|r| {
                let mut t = [0.0; MAX_INVARIANTS];
                t[0] = r.mass;
                t[1..=dim].copy_from_slice(&r.momentum[..dim]);
                t[dim + 1] = r.energy();
                t
            })
            .collect();

        let mut residual_max = 0.0_f64;
        match self.projection {
            ProjectionMode::Off => {
                let m = field_invariants(&g, n_cells, &phi, k, dv);
                for (mi, ti) in m.iter().zip(&targets) {
                    for a in 0..k {
                        residual_max = residual_max.max((mi[a] - ti[a]).abs());
                    }
                }
            }
            ProjectionMode::On(WeightKind::LocalGaussian) => {
                let m = field_invariants(&g, n_cells, &phi, k, dv);
                let grams = field_local_grams(&g, n_cells, &phi, k, dv);
                let lambdas: Vec<[f64; MAX_INVARIANTS]> = grams
                    .into_par_iter()
                    .zip(m.par_iter().zip(&targets))
                    .map(|(gram, (mi, ti))| {
                        let chol = gram.cholesky().ok_or(SolverError::SingularGram)?;
                        let rhs = nalgebra::DVector::from_fn(k, |a, _| ti[a] - mi[a]);
                        let sol = chol.solve(&rhs);
                        let mut l = [0.0; MAX_INVARIANTS];
                        for a in 0..k {
                            l[a] = sol[a] * dv;
                        }
                        Ok(l)
                    })
                    .collect::<Result<_>>()?;
                // G_hat_j = G_j (1 + dv^d phi_j . lambda)
                g.par_chunks_mut(n_cells).zip(phi.par_iter()).for_each(|(row, p)| {
                    for (x, l) in row.iter_mut().zip(&lambdas) {
                        let dot: f64 = (0..k).map(|a| p[a] * l[a]).sum();
                        *x += *x * dot;
                    }
                });
            }
            ProjectionMode::On(kind) => {
                let t_ref = cells.iter().map(|c| c.moments.temperature).fold(WEIGHT_FLOOR, f64::max);
                let omega = projection_weights(nodes, dim, kind, t_ref)?;
                let cs = ConstraintSystem::for_grid(vgrid, omega)?;
                let m = field_invariants(&g, n_cells, &phi, k, dv);
                let lambdas: Vec<[f64; MAX_INVARIANTS]> = m
                    .iter()
                    .zip(&targets)
                    .map(|(mi, ti)| {
                        let mut r = [0.0; MAX_INVARIANTS];
                        for a in 0..k {
                            r[a] = ti[a] - mi[a];
                        }
                        cs.multipliers(&r)
                    })
                    .collect();
                g.par_chunks_mut(n_cells).enumerate().for_each(|(j, row)| {
                    for (x, l) in row.iter_mut().zip(&lambdas) {
                        *x += cs.correction_at(j, l);
                    }
                });
            }
        }
        if self.projection.is_on() {
            let m = field_invariants(&g, n_cells, &phi, k, dv);
            for (mi, ti) in m.iter().zip(&targets) {
                for a in 0..k {
                    residual_max = residual_max.max((mi[a] - ti[a]).abs());
                }
            }
        }

        let gaussian_max = g.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max);
        let weights: Vec<f64> = cells.iter().map(|c| ctx.gaussian_weight(c.tau)).collect();
        let mut values = vec![0.0; ft.len()];
        values
            .par_chunks_mut(n_cells)
            .zip(ft.par_chunks(n_cells).zip(g.par_chunks(n_cells)))
            .for_each(|(out, (frow, grow))| {
                for i in 0..n_cells {
                    out[i] = convex_update(frow[i], grow[i], weights[i]);
                }
            });
        let relaxation = want_relaxation.then(|| {
            let taus: Vec<f64> = cells.iter().map(|c| c.tau).collect();
            let mut q = g;
            q.par_chunks_mut(n_cells).zip(values.par_chunks(n_cells)).for_each(|(qrow, frow)| {
                for i in 0..n_cells {
                    qrow[i] = taus[i] * (qrow[i] - frow[i]);
                }
            });
            q
        });
        Ok(StageResult {
            values,
            relaxation,
            cells,
            gaussian_max,
            projection_residual: residual_max,
        })
    }
}
