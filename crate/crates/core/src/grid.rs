//! Spatial and velocity discretizations and the phase-space field container.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// Spatial boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    FreeFlow,
}

/// Placement of the spatial nodes inside `[x_left, x_right]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLayout {
    /// `x_i = x_left + i dx`
    PeriodicNodes,
    /// `x_i = x_left + (i + 1/2) dx`
    CellCenters,
}

pub const MIN_CELLS: usize = 4;

/// Uniform 1D spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub layout: NodeLayout,
    pub bc: Boundary,
}

impl SpatialGrid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize, bc: Boundary) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_right <= x_left {
            return Err(SolverError::InvalidGrid(format!("inverted or degenerate domain [{x_left}, {x_right}]")));
        }
        if n_cells < MIN_CELLS {
            return Err(SolverError::InvalidGrid(format!("cell count {n_cells} below minimum {MIN_CELLS}")));
        }
        let layout = match bc {
            Boundary::Periodic => NodeLayout::PeriodicNodes,
            Boundary::FreeFlow => NodeLayout::CellCenters,
        };
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            dx: (x_right - x_left) / n_cells as f64,
            layout,
            bc,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        match self.layout {
            NodeLayout::PeriodicNodes => self.x_left + i as f64 * self.dx,
            NodeLayout::CellCenters => self.x_left + (i as f64 + 0.5) * self.dx,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }
}

/// Tensor-product velocity grid on `[-v_max, v_max]^dim` with `n_intervals + 1`
/// nodes per axis.
///
/// Node `j` has axis indices `(j_1, .., j_d)` with `j_1` varying slowest, so all
/// nodes sharing an x-velocity form one contiguous block.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub v_max: f64,
    pub n_intervals: usize,
    pub dim: usize,
    pub dv: f64,
    axis: Vec<f64>,
    nodes: Vec<[f64; 3]>,
}

impl VelocityGrid {
    pub fn new(v_max: f64, n_intervals: usize, dim: usize) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(SolverError::InvalidGrid(format!("v_max must be positive, got {v_max}")));
        }
        if n_intervals < 2 || !n_intervals.is_multiple_of(2) {
            return Err(SolverError::InvalidGrid(format!(
                "velocity interval count must be even and at least 2, got {n_intervals}"
            )));
        }
        if !(dim == 2 || dim == 3) {
            return Err(SolverError::InvalidGrid(format!("velocity dimension must be 2 or 3, got {dim}")));
        }
        let dv = 2.0 * v_max / n_intervals as f64;
        let half = (n_intervals / 2) as i64;
        // symmetric construction keeps v and -v exact negatives of each other
        let axis: Vec<f64> = (0..=n_intervals as i64).map(|j| (j - half) as f64 * dv).collect();
        let per_axis = n_intervals + 1;
        let count = per_axis.pow(dim as u32);
        let mut nodes = Vec::with_capacity(count);
        for j in 0..count {
            let mut v = [0.0; 3];
            let mut rem = j;
            for a in (0..dim).rev() {
                v[a] = axis[rem % per_axis];
                rem /= per_axis;
            }
            nodes.push(v);
        }
        Ok(Self {
            v_max,
            n_intervals,
            dim,
            dv,
            axis,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> [f64; 3] {
        self.nodes[j]
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Rectangle quadrature weight `(dv)^dim`, identical at every node.
    pub fn cell_volume(&self) -> f64 {
        self.dv.powi(self.dim as i32)
    }

    /// Index of the node `-v_j`.
    pub fn mirror(&self, j: usize) -> usize {
        let per_axis = self.n_intervals + 1;
        let mut rem = j;
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.dim {
            let idx = rem % per_axis;
            out += (self.n_intervals - idx) * scale;
            scale *= per_axis;
            rem /= per_axis;
        }
        out
    }
}

/// Distribution values `f_{i,j}` at time `t`, stored velocity-major:
/// `values[j * n_cells + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub spatial: SpatialGrid,
    pub velocity: VelocityGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl PhaseField {
    pub fn zeros(spatial: SpatialGrid, velocity: VelocityGrid) -> Self {
        let n = spatial.n_cells * velocity.len();
        Self {
            spatial,
            velocity,
            values: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn from_values(spatial: SpatialGrid, velocity: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != spatial.n_cells * velocity.len() {
            return Err(SolverError::InvalidGrid(format!(
                "field has {} values, grid expects {}",
                values.len(),
                spatial.n_cells * velocity.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("non-finite field value at flat index {k}")));
        }
        Ok(Self {
            spatial,
            velocity,
            values,
            time: 0.0,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.spatial.n_cells
    }

    pub fn get(&self, cell: usize, node: usize) -> f64 {
        self.values[node * self.spatial.n_cells + cell]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        let n = self.spatial.n_cells;
        &self.values[node * n..(node + 1) * n]
    }

    /// Values of all velocity nodes at one cell.
    pub fn cell_slice(&self, cell: usize) -> Vec<f64> {
        let n = self.spatial.n_cells;
        (0..self.velocity.len()).map(|j| self.values[j * n + cell]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Ghost-extended copy of every velocity row.
    pub fn ghost_extend(&self, n_ghost: usize) -> GhostedField {
        let n = self.spatial.n_cells;
        let width = n + 2 * n_ghost;
        let mut values = vec![0.0; width * self.velocity.len()];
        for (j, out) in values.chunks_exact_mut(width).enumerate() {
            extend_row(self.row(j), n_ghost, self.spatial.bc, out);
        }
        GhostedField {
            n_interior: n,
            n_ghost,
            values,
        }
    }
}

/// Velocity rows padded with `n_ghost` cells on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostedField {
    pub n_interior: usize,
    pub n_ghost: usize,
    pub values: Vec<f64>,
}

impl GhostedField {
    pub fn row(&self, node: usize) -> &[f64] {
        let w = self.n_interior + 2 * self.n_ghost;
        &self.values[node * w..(node + 1) * w]
    }

    pub fn interior_row(&self, node: usize) -> &[f64] {
        &self.row(node)[self.n_ghost..self.n_ghost + self.n_interior]
    }
}

/// Pads `row` into `out` (length `row.len() + 2 n_ghost`): wrap-around copies for
/// periodic data, constant extrapolation of the boundary values for free flow.
pub fn extend_row(row: &[f64], n_ghost: usize, bc: Boundary, out: &mut [f64]) {
    let n = row.len();
    debug_assert_eq!(out.len(), n + 2 * n_ghost);
    out[n_ghost..n_ghost + n].copy_from_slice(row);
    match bc {
        Boundary::Periodic => {
            for g in 0..n_ghost {
                // position -(g+1) and n+g, possibly wrapping several times
                let left = (n - 1 - g % n) % n;
                out[n_ghost - 1 - g] = row[left];
                out[n_ghost + n + g] = row[g % n];
            }
        }
        Boundary::FreeFlow => {
            let (first, last) = (row[0], row[n - 1]);
            out[..n_ghost].fill(first);
            out[n_ghost + n..].fill(last);
        }
    }
}

/// Convenience wrapper returning a fresh extended row. A negative ghost depth is
/// rejected.
pub fn ghost_extend(row: &[f64], n_ghost: i64, bc: Boundary) -> Result<Vec<f64>> {
    if n_ghost < 0 {
        return Err(SolverError::InvalidParameter(format!("negative ghost depth {n_ghost}")));
    }
    let g = n_ghost as usize;
    let mut out = vec![0.0; row.len() + 2 * g];
    extend_row(row, g, bc, &mut out);
    Ok(out)
}

/// Time step from a CFL number: `dt = cfl dx / v_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflSpec {
    pub cfl: f64,
}

impl CflSpec {
    pub fn new(cfl: f64) -> Result<Self> {
        if !(cfl.is_finite() && cfl > 0.0) {
            return Err(SolverError::InvalidParameter(format!("CFL must be positive, got {cfl}")));
        }
        Ok(Self { cfl })
    }

    pub fn time_step(&self, spatial: &SpatialGrid, velocity: &VelocityGrid) -> f64 {
        self.cfl * spatial.dx / velocity.v_max
    }
}
