//! Discrete macroscopic moments, Gaussian/Maxwellian evaluation and the small
//! symmetric tensor algebra they need (`dim <= 3`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::VelocityGrid;

/// Square matrix of size `dim <= 3` stored in a fixed 3x3 array; entries outside
/// the leading `dim x dim` block are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor {
    pub dim: usize,
    pub m: [[f64; 3]; 3],
}

impl Tensor {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(dim, &[1.0; 3])
    }

    pub fn diagonal(dim: usize, d: &[f64]) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            t.m[a][a] = d[a];
        }
        t
    }

    pub fn from_rows(dim: usize, rows: &[&[f64]]) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                t.m[a][b] = rows[a][b];
            }
        }
        t
    }

    /// `u (x) u` restricted to the leading `dim` components.
    pub fn outer(dim: usize, u: &[f64; 3]) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            for b in 0..dim {
                t.m[a][b] = u[a] * u[b];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        t
    }

    pub fn add(&self, other: &Tensor) -> Self {
        let mut t = *self;
        for a in 0..3 {
            for b in 0..3 {
                t.m[a][b] += other.m[a][b];
            }
        }
        t
    }

    pub fn sub(&self, other: &Tensor) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|a| self.m[a][a]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        let mut t = Tensor::zeros(self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                t.m[a][b] = (0..self.dim).map(|c| self.m[a][c] * other.m[c][b]).sum();
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|a| (0..a).all(|b| self.m[a][b] == self.m[b][a]))
    }

    /// Leading principal minors, smallest first.
    pub fn leading_minors(&self) -> Vec<f64> {
        let m = &self.m;
        let mut out = vec![m[0][0]];
        if self.dim >= 2 {
            out.push(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
        }
        if self.dim == 3 {
            out.push(self.det());
        }
        out
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Cofactor inverse; the caller guarantees `det != 0`.
    pub fn inverse(&self) -> Tensor {
        let m = &self.m;
        let det = self.det();
        let mut t = Tensor::zeros(self.dim);
        match self.dim {
            1 => t.m[0][0] = 1.0 / det,
            2 => {
                t.m[0][0] = m[1][1] / det;
                t.m[1][1] = m[0][0] / det;
                t.m[0][1] = -m[0][1] / det;
                t.m[1][0] = -m[1][0] / det;
            }
            _ => {
                t.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
                t.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
                t.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
                t.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
                t.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
                t.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
                t.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
                t.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
                t.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
            }
        }
        t
    }

    /// Quadratic form `w^T M w`.
    #[inline]
    pub fn quad_form(&self, w: &[f64; 3]) -> f64 {
        let m = &self.m;
        let mut s = 0.0;
        for a in 0..self.dim {
            let mut r = 0.0;
            for b in 0..self.dim {
                r += m[a][b] * w[b];
            }
            s += w[a] * r;
        }
        s
    }
}

/// Symmetric positive definite temperature tensor with cached inverse and
/// determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationTensor {
    pub tensor: Tensor,
    pub inverse: Tensor,
    pub det: f64,
}

impl RelaxationTensor {
    /// Checks positive definiteness with Sylvester's criterion (strict).
    pub fn new(tensor: Tensor, cell: usize) -> Result<Self> {
        let minors = tensor.leading_minors();
        if minors.iter().any(|m| !(*m > 0.0)) {
            return Err(SolverError::NonSpdTensor { cell, minors });
        }
        Ok(Self {
            tensor,
            inverse: tensor.inverse(),
            det: tensor.det(),
        })
    }

    pub fn isotropic(dim: usize, temperature: f64, cell: usize) -> Result<Self> {
        Self::new(Tensor::identity(dim).scale(temperature), cell)
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim
    }
}

/// Relaxation rate as a function of the local density and temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TauLaw {
    Constant {
        tau: f64,
    },
    /// `tau = c rho`
    Density {
        c: f64,
    },
    /// `tau = c rho sqrt(T)`
    DensitySqrtT {
        c: f64,
    },
}

impl TauLaw {
    #[inline]
    pub fn eval(&self, rho: f64, temperature: f64) -> f64 {
        match *self {
            TauLaw::Constant { tau } => tau,
            TauLaw::Density { c } => c * rho,
            TauLaw::DensitySqrtT { c } => c * rho * temperature.sqrt(),
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            TauLaw::Constant { tau } => tau,
            TauLaw::Density { c } | TauLaw::DensitySqrtT { c } => c,
        }
    }
}

/// Free parameter `nu`, Knudsen number `epsilon` and relaxation-rate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub epsilon: f64,
    pub tau_law: TauLaw,
}

impl ModelParams {
    pub fn new(nu: f64, epsilon: f64, tau_law: TauLaw, dim: usize) -> Result<Self> {
        let p = Self { nu, epsilon, tau_law };
        p.validate(dim)?;
        Ok(p)
    }

    /// Admissible `nu`: `[-1/2, 1)` for `dim = 3`, `[-1, 1)` for `dim = 2`.
    pub fn nu_range(dim: usize) -> (f64, f64) {
        match dim {
            2 => (-1.0, 1.0),
            _ => (-0.5, 1.0),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let (lo, hi) = Self::nu_range(dim);
        if !(self.nu >= lo && self.nu < hi) {
            return Err(SolverError::InvalidParameter(format!("nu = {} outside [{lo}, {hi}) for dim {dim}", self.nu)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(SolverError::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tau_law.coefficient().is_finite() && self.tau_law.coefficient() > 0.0) {
            return Err(SolverError::InvalidParameter("relaxation-rate coefficient must be positive".into()));
        }
        Ok(())
    }
}

/// Raw sums `sum_j f_j (1, v_j, v_j (x) v_j) dv^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMoments {
    pub dim: usize,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub second: Tensor,
}

impl RawMoments {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            mass: 0.0,
            momentum: [0.0; 3],
            second: Tensor::zeros(dim),
        }
    }

    pub fn accumulate(values: &[f64], vgrid: &VelocityGrid) -> Self {
        let dim = vgrid.dim;
        let mut r = Self::zeros(dim);
        for (f, v) in values.iter().zip(vgrid.nodes()) {
            r.mass += f;
            for a in 0..dim {
                let fva = f * v[a];
                r.momentum[a] += fva;
                for b in a..dim {
                    r.second.m[a][b] += fva * v[b];
                }
            }
        }
        r.finish(vgrid.cell_volume())
    }

    /// Applies the quadrature weight and fills the lower triangle.
    pub(crate) fn finish(mut self, w: f64) -> Self {
        self.mass *= w;
        for a in 0..3 {
            self.momentum[a] *= w;
            for b in a..3 {
                self.second.m[a][b] *= w;
                self.second.m[b][a] = self.second.m[a][b];
            }
        }
        self
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.second.trace()
    }

    /// Collision invariants `(rho, rho U, E)` packed in `dim + 2` slots.
    pub fn invariants(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim + 2);
        out.push(self.mass);
        out.extend_from_slice(&self.momentum[..self.dim]);
        out.push(self.energy());
        out
    }
}

/// Per-cell macroscopic quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub dim: usize,
    pub rho: f64,
    pub u: [f64; 3],
    pub energy: f64,
    pub temperature: f64,
    /// Stress tensor `Theta`.
    pub stress: Tensor,
    /// Raw second moment `Sigma = sum f v (x) v dv^d`.
    pub sigma: Tensor,
    /// Heat flux along the spatial axis.
    pub heat_flux: f64,
}

impl MomentSet {
    /// Derives velocity, temperature and stress from raw sums. The heat flux is
    /// left at zero.
    pub fn from_raw(raw: &RawMoments, cell: usize) -> Result<Self> {
        let dim = raw.dim;
        let rho = raw.mass;
        if !(rho > 0.0) {
            return Err(SolverError::NonpositiveDensity { cell, rho });
        }
        let mut u = [0.0; 3];
        for a in 0..dim {
            u[a] = raw.momentum[a] / rho;
        }
        let stress = raw.second.scale(1.0 / rho).sub(&Tensor::outer(dim, &u));
        let temperature = stress.trace() / dim as f64;
        Ok(Self {
            dim,
            rho,
            u,
            energy: raw.energy(),
            temperature,
            stress,
            sigma: raw.second,
            heat_flux: 0.0,
        })
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.rho * (0..self.dim).map(|a| self.u[a] * self.u[a]).sum::<f64>()
    }

    pub fn pressure(&self) -> f64 {
        self.rho * self.temperature
    }
}

/// Moments of one cell's velocity slice, heat flux included.
pub fn compute_moments(values: &[f64], vgrid: &VelocityGrid) -> Result<MomentSet> {
    compute_moments_at(values, vgrid, 0)
}

pub(crate) fn compute_moments_at(values: &[f64], vgrid: &VelocityGrid, cell: usize) -> Result<MomentSet> {
    if values.len() != vgrid.len() {
        return Err(SolverError::InvalidParameter(format!(
            "slice has {} values, velocity grid has {} nodes",
            values.len(),
            vgrid.len()
        )));
    }
    let raw = RawMoments::accumulate(values, vgrid);
    let mut m = MomentSet::from_raw(&raw, cell)?;
    m.heat_flux = heat_flux(values, vgrid, &m.u);
    Ok(m)
}

/// `sum_j f_j |v_j - U|^2 / 2 (v_j - U)_1 dv^d`
pub fn heat_flux(values: &[f64], vgrid: &VelocityGrid, u: &[f64; 3]) -> f64 {
    let dim = vgrid.dim;
    let mut q = 0.0;
    for (f, v) in values.iter().zip(vgrid.nodes()) {
        let mut c2 = 0.0;
        for a in 0..dim {
            let c = v[a] - u[a];
            c2 += c * c;
        }
        q += f * 0.5 * c2 * (v[0] - u[0]);
    }
    q * vgrid.cell_volume()
}

/// `nu Theta + (1 - nu) T I`
pub fn temperature_tensor(nu: f64, stress: &Tensor, temperature: f64) -> Result<RelaxationTensor> {
    temperature_tensor_at(nu, stress, temperature, 0)
}

pub(crate) fn temperature_tensor_at(nu: f64, stress: &Tensor, temperature: f64, cell: usize) -> Result<RelaxationTensor> {
    if !(temperature > 0.0) {
        return Err(SolverError::NonpositiveTemperature { cell, temperature });
    }
    let t = stress.scale(nu).add(&Tensor::identity(stress.dim).scale((1.0 - nu) * temperature));
    RelaxationTensor::new(t, cell)
}

/// Precomputed data for evaluating one anisotropic Gaussian at many nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShape {
    pub u: [f64; 3],
    pub inverse: Tensor,
    pub prefactor: f64,
}

impl GaussianShape {
    pub fn new(rho: f64, u: [f64; 3], tensor: &RelaxationTensor) -> Self {
        let dim = tensor.dim();
        let norm = (2.0 * PI).powi(dim as i32) * tensor.det;
        Self {
            u,
            inverse: tensor.inverse,
            prefactor: rho / norm.sqrt(),
        }
    }

    #[inline]
    pub fn eval(&self, v: &[f64; 3]) -> f64 {
        let w = [v[0] - self.u[0], v[1] - self.u[1], v[2] - self.u[2]];
        self.prefactor * (-0.5 * self.inverse.quad_form(&w)).exp()
    }
}

/// `rho / sqrt(det(2 pi T)) exp(-(v - U)^T T^{-1} (v - U) / 2)` at every node.
pub fn eval_gaussian(rho: f64, u: [f64; 3], tensor: &RelaxationTensor, vgrid: &VelocityGrid) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(SolverError::NonpositiveDensity { cell: 0, rho });
    }
    if tensor.dim() != vgrid.dim {
        return Err(SolverError::InvalidParameter("tensor and velocity grid dimensions differ".into()));
    }
    let g = GaussianShape::new(rho, u, tensor);
    Ok(vgrid.nodes().iter().map(|v| g.eval(v)).collect())
}

/// Isotropic special case of [`eval_gaussian`].
pub fn eval_maxwellian(rho: f64, u: [f64; 3], temperature: f64, vgrid: &VelocityGrid) -> Result<Vec<f64>> {
    let t = RelaxationTensor::isotropic(vgrid.dim, temperature, 0)?;
    eval_gaussian(rho, u, &t, vgrid)
}
