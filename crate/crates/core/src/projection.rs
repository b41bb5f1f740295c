//! Weighted L2 correction of a discrete Gaussian so that its discrete collision
//! invariants match prescribed values.
//!
//! With `C` the `(d + 2) x M` matrix of weighted invariant rows
//! `omega_j phi_j dv^d`, `phi_j = (1, v_j, |v_j|^2 / 2)`, the corrected vector is
//!
//! ```text
//! G_hat = G + [C^T (C C^T)^{-1} (U - C (G / omega))] o omega
//! ```
//!
//! Because `C (G / omega) = sum_j phi_j G_j dv^d` the weights cancel in the
//! residual, and the correction at node `j` reduces to
//! `omega_j^2 dv^d phi_j . lambda` with `lambda = (C C^T)^{-1} (U - m(G))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::VelocityGrid;

/// Largest number of invariants (`dim = 3`).
pub const MAX_INVARIANTS: usize = 5;

/// Floor applied to weights so they never underflow to zero.
pub const WEIGHT_FLOOR: f64 = 1e-30;

/// How the correction weights `omega` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `omega_j = exp(-|v_j|^2 / (2 T_ref))`, floored at [`WEIGHT_FLOOR`].
    ReferenceMaxwellian,
    /// `omega_j = 1`.
    Uniform,
    /// `omega_j^2 = G_j`, chosen per cell from the Gaussian being corrected.
    /// The correction becomes `G_j dv^d phi_j . lambda`, a relative change that
    /// keeps tiny tail values nonnegative.
    LocalGaussian,
}

/// Grid-wide weights. [`WeightKind::LocalGaussian`] depends on the Gaussian and
/// is rejected here; use [`local_weights`].
pub fn projection_weights(nodes: &[[f64; 3]], dim: usize, kind: WeightKind, t_ref: f64) -> Result<Vec<f64>> {
    Ok(match kind {
        WeightKind::Uniform => vec![1.0; nodes.len()],
        WeightKind::LocalGaussian => return Err(SolverError::InvalidParameter("local weights depend on the Gaussian".into())),
        WeightKind::ReferenceMaxwellian => nodes
            .iter()
            .map(|v| {
                let v2: f64 = v[..dim].iter().map(|x| x * x).sum();
                (-v2 / (2.0 * t_ref)).exp().max(WEIGHT_FLOOR)
            })
            .collect(),
    })
}

/// `omega_j = sqrt(G_j)`, floored at [`WEIGHT_FLOOR`].
pub fn local_weights(gaussian: &[f64]) -> Vec<f64> {
    gaussian.iter().map(|g| g.max(0.0).sqrt().max(WEIGHT_FLOOR)).collect()
}

/// Target invariants `(rho, rho U, E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTarget {
    values: Vec<f64>,
}

impl MomentTarget {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let dim = values
            .len()
            .checked_sub(2)
            .filter(|d| (1..=3).contains(d))
            .ok_or_else(|| SolverError::InvalidParameter(format!("target needs 3 to 5 invariants, got {}", values.len())))?;
        let rho = values[0];
        if !(rho > 0.0) {
            return Err(SolverError::NonpositiveDensity { cell: 0, rho });
        }
        let kinetic: f64 = values[1..=dim].iter().map(|m| m * m).sum::<f64>() / (2.0 * rho);
        if !(values[dim + 1] > kinetic) {
            return Err(SolverError::InvalidParameter("target internal energy must be positive".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Invariant rows, weights and the factorized gram matrix `C C^T`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub cell_volume: f64,
    phi: Vec<[f64; MAX_INVARIANTS]>,
    omega: Vec<f64>,
    /// `omega_j^2 dv^d`
    correction: Vec<f64>,
    gram_inverse: [[f64; MAX_INVARIANTS]; MAX_INVARIANTS],
    gram: DMatrix<f64>,
}

fn invariants_of(v: &[f64; 3], dim: usize) -> [f64; MAX_INVARIANTS] {
    let mut phi = [0.0; MAX_INVARIANTS];
    phi[0] = 1.0;
    let mut v2 = 0.0;
    for a in 0..dim {
        phi[1 + a] = v[a];
        v2 += v[a] * v[a];
    }
    phi[dim + 1] = 0.5 * v2;
    phi
}

impl ConstraintSystem {
    pub fn for_grid(vgrid: &VelocityGrid, omega: Vec<f64>) -> Result<Self> {
        Self::from_nodes(vgrid.nodes(), vgrid.dim, vgrid.cell_volume(), omega)
    }

    /// Builds the system for an arbitrary node set (`dim` in 1..=3; unused
    /// components of each node are ignored).
    pub fn from_nodes(nodes: &[[f64; 3]], dim: usize, cell_volume: f64, omega: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SolverError::InvalidParameter(format!("invariant dimension {dim} unsupported")));
        }
        if omega.len() != nodes.len() {
            return Err(SolverError::InvalidParameter("one weight per node required".into()));
        }
        if omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(SolverError::InvalidParameter("projection weights must be positive".into()));
        }
        let k = dim + 2;
        let phi: Vec<_> = nodes.iter().map(|v| invariants_of(v, dim)).collect();
        let correction: Vec<f64> = omega.iter().map(|w| w * w * cell_volume).collect();
        // C C^T = sum_j omega_j^2 dv^{2d} phi_j phi_j^T
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for (p, c) in phi.iter().zip(&correction) {
            let w = c * cell_volume;
            for a in 0..k {
                for b in a..k {
                    gram[(a, b)] += w * p[a] * p[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let chol = gram.clone().cholesky().ok_or(SolverError::SingularGram)?;
        // Reject numerically rank-deficient systems: the smallest pivot must not
        // vanish relative to the largest diagonal entry.
        let scale = (0..k).map(|a| gram[(a, a)]).fold(0.0, f64::max);
        let min_pivot = (0..k).map(|a| chol.l_dirty()[(a, a)].powi(2)).fold(f64::INFINITY, f64::min);
        if !(min_pivot > 1e-13 * scale) {
            return Err(SolverError::SingularGram);
        }
        let inv = chol.inverse();
        if inv.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::SingularGram);
        }
        let mut gram_inverse = [[0.0; MAX_INVARIANTS]; MAX_INVARIANTS];
        for a in 0..k {
            for b in 0..k {
                gram_inverse[a][b] = inv[(a, b)];
            }
        }
        Ok(Self {
            dim,
            cell_volume,
            phi,
            omega,
            correction,
            gram_inverse,
            gram,
        })
    }

    pub fn n_invariants(&self) -> usize {
        self.dim + 2
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.omega
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Dense `C`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.n_invariants();
        DMatrix::from_fn(k, self.len(), |a, j| self.omega[j] * self.phi[j][a] * self.cell_volume)
    }

    #[inline]
    pub fn phi(&self, node: usize) -> &[f64; MAX_INVARIANTS] {
        &self.phi[node]
    }

    #[inline]
    pub fn correction_weight(&self, node: usize) -> f64 {
        self.correction[node]
    }

    /// Discrete invariants `sum_j phi_j g_j dv^d`.
    pub fn moments(&self, values: &[f64]) -> [f64; MAX_INVARIANTS] {
        let k = self.n_invariants();
        let mut m = [0.0; MAX_INVARIANTS];
        for (g, p) in values.iter().zip(&self.phi) {
            for a in 0..k {
                m[a] += g * p[a];
            }
        }
        for v in m.iter_mut() {
            *v *= self.cell_volume;
        }
        m
    }

    /// `(C C^T)^{-1} residual`
    #[inline]
    pub fn multipliers(&self, residual: &[f64; MAX_INVARIANTS]) -> [f64; MAX_INVARIANTS] {
        let k = self.n_invariants();
        let mut out = [0.0; MAX_INVARIANTS];
        for a in 0..k {
            out[a] = (0..k).map(|b| self.gram_inverse[a][b] * residual[b]).sum();
        }
        out
    }

    /// Correction at one node for multipliers `lambda`.
    #[inline]
    pub fn correction_at(&self, node: usize, lambda: &[f64; MAX_INVARIANTS]) -> f64 {
        let p = &self.phi[node];
        let dot: f64 = (0..self.n_invariants()).map(|a| p[a] * lambda[a]).sum();
        self.correction[node] * dot
    }

    /// Applies the closed-form correction to `g`.
    pub fn project(&self, g: &[f64], target: &MomentTarget) -> Result<Vec<f64>> {
        self.project_values(g, target.values())
    }

    /// [`ConstraintSystem::project`] without target validation.
    pub fn project_values(&self, g: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        let k = self.n_invariants();
        if g.len() != self.len() || target.len() != k {
            return Err(SolverError::InvalidParameter(
                "projection input sizes do not match the constraint system".into(),
            ));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::InvalidParameter("non-finite Gaussian value".into()));
        }
        let m = self.moments(g);
        let mut residual = [0.0; MAX_INVARIANTS];
        for a in 0..k {
            residual[a] = target[a] - m[a];
        }
        let lambda = self.multipliers(&residual);
        Ok(g.iter().enumerate().map(|(j, x)| x + self.correction_at(j, &lambda)).collect())
    }

    /// `||C (g / omega) - U||_inf`
    pub fn residual(&self, g: &[f64], target: &[f64]) -> f64 {
        let m = self.moments(g);
        (0..self.n_invariants()).map(|a| (m[a] - target[a]).abs()).fold(0.0, f64::max)
    }
}

/// Dense-solve cross-check used by diagnostics: returns `G_hat` from the full
/// KKT system `[2I C^T; C 0] [g; lambda] = [2 G/omega; U]`.
pub fn project_kkt(cs: &ConstraintSystem, g: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    let m = cs.len();
    let k = cs.n_invariants();
    let c = cs.matrix();
    let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
    let mut rhs = DVector::<f64>::zeros(m + k);
    for j in 0..m {
        kkt[(j, j)] = 2.0;
        rhs[j] = 2.0 * g[j] / cs.omega[j];
    }
    for a in 0..k {
        for j in 0..m {
            kkt[(m + a, j)] = c[(a, j)];
            kkt[(j, m + a)] = c[(a, j)];
        }
        rhs[m + a] = target[a];
    }
    let sol = kkt.lu().solve(&rhs).ok_or(SolverError::SingularGram)?;
    Ok((0..m).map(|j| sol[j] * cs.omega[j]).collect())
}
