//! Conservative evaluation of grid functions at uniformly shifted points.
//!
//! Point values are treated as cell averages of an unknown function. In every
//! cell a CWENO polynomial with the prescribed averages is built, and the value at
//! a shifted node is the average of this piecewise polynomial over a sliding
//! window of width `dx` centred at the foot. Writing the window as the right part
//! of cell `k - 1` plus the left part of cell `k` yields the flux form
//!
//! ```text
//! out_i = u_k - F_k(theta) + F_{k-1}(theta),   F_k(theta) = avg over the right theta-fraction of cell k
//! ```
//!
//! so shifted sums telescope on periodic data for any nonlinear weights.
//!
//! The nonlinear weights are Z-type: `alpha_l = d_l (1 + (tau / (beta_l + eps))^2)`
//! where `tau` is the square of the summed magnitudes of the two undivided
//! differences of order `2r + 1` that fit in the stencil. Those differences vanish on polynomials the optimal
//! reconstruction reproduces, so the linear weights (and exactness) are recovered
//! there. Both `tau` and `beta` are quadratic in the data and the regulariser
//! is relative to the row magnitude, `eps = c dx^2 max_k u_k^2`, so the
//! reconstruction commutes with scaling: rows differing by a constant factor
//! (the velocity tails of a Maxwellian, say) are treated identically.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::{extend_row, Boundary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionKind {
    /// Piecewise linear interpolation between neighbouring nodes (order 2 in space).
    Linear,
    /// Third order in smooth regions, second order near discontinuities.
    Qcweno23,
    /// Fifth order in smooth regions, third order near discontinuities.
    Qcweno35,
}

impl ReconstructionKind {
    pub fn stencil_halfwidth(self) -> usize {
        match self {
            ReconstructionKind::Linear => 1,
            ReconstructionKind::Qcweno23 => 2,
            ReconstructionKind::Qcweno35 => 3,
        }
    }

    /// Cells on each side read when building the polynomial of one cell.
    fn cell_radius(self) -> usize {
        match self {
            ReconstructionKind::Linear => 0,
            ReconstructionKind::Qcweno23 => 2,
            ReconstructionKind::Qcweno35 => 3,
        }
    }
}

pub const DEFAULT_EPS_SCALE: f64 = 1.0;

/// Tables of a CWENO reconstruction with an optimal polynomial on `N` averages
/// (`N = 2r + 1`) and `r + 1` lateral polynomials on `Q = r + 1` averages each.
#[derive(Debug, Clone)]
struct CwenoTables<const N: usize, const Q: usize> {
    /// Monomial coefficients of the optimal polynomial (row n = coefficient of xi^n).
    #[cfg_attr(not(test), allow(dead_code))]
    opt: [[f64; N]; N],
    /// Monomial coefficients of the central polynomial `P0 = (P_opt - sum d_l P_l) / d_0`.
    central: [[f64; N]; N],
    /// Lateral coefficient maps; lateral `l` uses offsets `l - r ..= l`.
    lateral: Vec<[[f64; Q]; Q]>,
    d_central: f64,
    d_lateral: f64,
    /// `beta = c^T B c` over derivative-carrying coefficients.
    beta_opt: [[f64; N]; N],
    beta_lat: [[f64; Q]; Q],
    /// Binomial coefficients of the undivided difference of order N.
    tau_stencil: [f64; 6],
}

/// Average of `xi^n` over the unit cell centred at `r`.
fn monomial_average(r: f64, n: usize) -> f64 {
    let p = (n + 1) as i32;
    ((r + 0.5).powi(p) - (r - 0.5).powi(p)) / p as f64
}

/// `int_{1/2 - theta}^{1/2} xi^n dxi`
fn right_fraction_integral(theta: f64, n: usize) -> f64 {
    let p = (n + 1) as i32;
    (0.5_f64.powi(p) - (0.5 - theta).powi(p)) / p as f64
}

fn coefficient_map<const S: usize>(offsets: [f64; S]) -> [[f64; S]; S] {
    let m = nalgebra::DMatrix::from_fn(S, S, |row, col| monomial_average(offsets[row], col));
    let inv = m.try_inverse().expect("averaging matrix is nonsingular");
    let mut out = [[0.0; S]; S];
    for n in 0..S {
        for r in 0..S {
            out[n][r] = inv[(n, r)];
        }
    }
    out
}

/// Jiang-Shu indicator matrix: `sum_{l>=1} int (d^l p / dxi^l)^2` as a form on
/// monomial coefficients.
fn indicator_matrix<const S: usize>() -> [[f64; S]; S] {
    let mut b = [[0.0; S]; S];
    for n in 1..S {
        for m in 1..S {
            let mut acc = 0.0;
            for l in 1..=n.min(m) {
                let cn: f64 = ((n - l + 1)..=n).map(|k| k as f64).product();
                let cm: f64 = ((m - l + 1)..=m).map(|k| k as f64).product();
                let p = (n - l) + (m - l);
                if p % 2 == 0 {
                    acc += cn * cm * 2.0 * 0.5_f64.powi(p as i32 + 1) / (p + 1) as f64;
                }
            }
            b[n][m] = acc;
        }
    }
    b
}

impl<const N: usize, const Q: usize> CwenoTables<N, Q> {
    fn new(d_central: f64) -> Self {
        let r = (N - 1) / 2;
        let offsets: [f64; N] = std::array::from_fn(|k| k as f64 - r as f64);
        let opt = coefficient_map(offsets);
        let lateral: Vec<[[f64; Q]; Q]> = (0..=r).map(|l| coefficient_map(std::array::from_fn(|k| (l + k) as f64 - r as f64))).collect();
        let d_lateral = (1.0 - d_central) / (r + 1) as f64;
        let mut central = [[0.0; N]; N];
        for n in 0..N {
            for s in 0..N {
                let mut v = opt[n][s];
                if n < Q {
                    for (l, lat) in lateral.iter().enumerate() {
                        if s >= l && s < l + Q {
                            v -= d_lateral * lat[n][s - l];
                        }
                    }
                }
                central[n][s] = v / d_central;
            }
        }
        let mut tau_stencil = [0.0; 6];
        // (-1)^(N-k) binom(N, k), k = 0..=N
        let mut binom = 1.0;
        for k in 0..=N {
            let sign = if (N - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            tau_stencil[k] = sign * binom;
            binom = binom * (N - k) as f64 / (k + 1) as f64;
        }
        Self {
            opt,
            central,
            lateral,
            d_central,
            d_lateral,
            beta_opt: indicator_matrix::<N>(),
            beta_lat: indicator_matrix::<Q>(),
            tau_stencil,
        }
    }
}

/// Per-row weights turning stencil averages into right-fraction integrals.
struct RowWeights<const N: usize, const Q: usize> {
    central: [f64; N],
    lateral: Vec<[f64; Q]>,
}

impl<const N: usize, const Q: usize> CwenoTables<N, Q> {
    fn row_weights(&self, theta: f64) -> RowWeights<N, Q> {
        let a: [f64; N] = std::array::from_fn(|n| right_fraction_integral(theta, n));
        let central = std::array::from_fn(|s| (0..N).map(|n| a[n] * self.central[n][s]).sum());
        let lateral = self
            .lateral
            .iter()
            .map(|lat| std::array::from_fn(|s| (0..Q).map(|n| a[n] * lat[n][s]).sum()))
            .collect();
        RowWeights { central, lateral }
    }

    /// Right-fraction integral of the CWENO polynomial of the cell whose
    /// `N + 3` point neighbourhood (`r + 1` on each side) is `u`.
    #[inline]
    fn cell_flux(&self, u: &[f64], w: &RowWeights<N, Q>, eps: f64) -> f64 {
        let r = (N - 1) / 2;
        // centred stencil of the optimal polynomial
        let s = &u[1..1 + N];
        let mut tau_l = 0.0;
        let mut tau_r = 0.0;
        for k in 0..=N {
            tau_l += self.tau_stencil[k] * u[k];
            tau_r += self.tau_stencil[k] * u[k + 1];
        }
        // squared so that tau carries the units of beta
        let tau = sq(tau_l.abs() + tau_r.abs());

        let mut c0 = [0.0; N];
        for n in 1..N {
            c0[n] = (0..N).map(|k| self.central[n][k] * s[k]).sum();
        }
        let beta0 = quad_form(&self.beta_opt, &c0);
        let f0: f64 = (0..N).map(|k| w.central[k] * s[k]).sum();
        let a0 = self.d_central * (1.0 + sq(tau / (beta0 + eps)));
        let mut alpha_sum = a0;
        let mut acc = a0 * f0;
        for l in 0..=r {
            let sl = &s[l..l + Q];
            let lat = &self.lateral[l];
            let mut cl = [0.0; Q];
            for n in 1..Q {
                cl[n] = (0..Q).map(|k| lat[n][k] * sl[k]).sum();
            }
            let beta = quad_form(&self.beta_lat, &cl);
            let fl: f64 = (0..Q).map(|k| w.lateral[l][k] * sl[k]).sum();
            let al = self.d_lateral * (1.0 + sq(tau / (beta + eps)));
            alpha_sum += al;
            acc += al * fl;
        }
        acc / alpha_sum
    }

    /// Linear-weight (optimal) polynomial coefficients, used by tests.
    #[cfg(test)]
    fn optimal_coefficients(&self, s: &[f64]) -> [f64; N] {
        std::array::from_fn(|n| (0..N).map(|k| self.opt[n][k] * s[k]).sum())
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

#[inline]
fn quad_form<const S: usize>(b: &[[f64; S]; S], c: &[f64; S]) -> f64 {
    let mut acc = 0.0;
    for n in 1..S {
        let mut row = 0.0;
        for m in 1..S {
            row += b[n][m] * c[m];
        }
        acc += c[n] * row;
    }
    acc
}

#[derive(Debug, Clone)]
enum Tables {
    Linear,
    W23(Box<CwenoTables<3, 2>>),
    W35(Box<CwenoTables<5, 3>>),
}

/// A reconstruction of a given kind bound to a grid spacing.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub kind: ReconstructionKind,
    /// Relative regulariser `c dx^2`; the absolute value scales with the squared row magnitude.
    pub smoothness_eps: f64,
    tables: Tables,
}

/// Splits a shift measured in cells into `m + theta`, `theta in [0, 1)`.
pub fn split_shift(shift_cells: f64) -> (i64, f64) {
    let m = shift_cells.floor();
    let theta = shift_cells - m;
    if theta >= 1.0 {
        (m as i64 + 1, 0.0)
    } else {
        (m as i64, theta)
    }
}

impl Reconstruction {
    pub fn new(kind: ReconstructionKind, dx: f64) -> Self {
        Self::with_eps(kind, DEFAULT_EPS_SCALE * dx * dx)
    }

    pub fn with_eps(kind: ReconstructionKind, smoothness_eps: f64) -> Self {
        assert!(smoothness_eps > 0.0, "smoothness regularizer must be positive");
        let tables = match kind {
            ReconstructionKind::Linear => Tables::Linear,
            ReconstructionKind::Qcweno23 => Tables::W23(Box::new(CwenoTables::new(0.5))),
            ReconstructionKind::Qcweno35 => Tables::W35(Box::new(CwenoTables::new(0.5))),
        };
        Self { kind, smoothness_eps, tables }
    }

    /// Regulariser for one row: `smoothness_eps * max_k u_k^2`.
    fn absolute_eps(&self, ext: &[f64]) -> f64 {
        let scale = ext.iter().fold(0.0_f64, |m, x| m.max(x * x));
        if scale > 0.0 {
            self.smoothness_eps * scale
        } else {
            1.0
        }
    }

    /// Ghost cells needed on each side for a shift of `shift_cells`.
    pub fn ghost_depth(&self, shift_cells: f64) -> usize {
        let (m, theta) = split_shift(shift_cells);
        if theta == 0.0 {
            return m.unsigned_abs() as usize;
        }
        let r = self.kind.cell_radius() as i64;
        (m + 1 + r).max(r - m).max(0) as usize
    }

    /// Evaluates `R(x_i - s)` for the `n` interior cells of a ghosted row
    /// (`ext.len() == n + 2 n_ghost`), with `s = shift_cells * dx`.
    pub fn shift_ghosted(&self, ext: &[f64], n_ghost: usize, shift_cells: f64, out: &mut [f64]) -> Result<()> {
        let n = out.len();
        debug_assert_eq!(ext.len(), n + 2 * n_ghost);
        let needed = self.ghost_depth(shift_cells);
        if needed > n_ghost {
            return Err(SolverError::StencilOutOfRange { needed, available: n_ghost });
        }
        let (m, theta) = split_shift(shift_cells);
        let g = n_ghost as i64;
        // ext index of interior cell k is k + g
        let base = g - m;
        if theta == 0.0 {
            for (i, o) in out.iter_mut().enumerate() {
                *o = ext[(i as i64 + base) as usize];
            }
            return Ok(());
        }
        match &self.tables {
            Tables::Linear => {
                for (i, o) in out.iter_mut().enumerate() {
                    let k = (i as i64 + base) as usize;
                    let (here, left) = (ext[k], ext[k - 1]);
                    *o = here + theta * (left - here);
                }
            }
            Tables::W23(t) => shift_cweno(t, ext, base, theta, self.absolute_eps(ext), out),
            Tables::W35(t) => shift_cweno(t, ext, base, theta, self.absolute_eps(ext), out),
        }
        Ok(())
    }

    /// Shifts an interior row, building ghost cells from the boundary condition.
    /// `scratch` is reused between calls.
    pub fn shift_row(&self, row: &[f64], bc: Boundary, shift_cells: f64, scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        let g = self.ghost_depth(shift_cells);
        scratch.resize(row.len() + 2 * g, 0.0);
        extend_row(row, g, bc, scratch);
        self.shift_ghosted(scratch, g, shift_cells, out)
    }
}

fn shift_cweno<const N: usize, const Q: usize>(t: &CwenoTables<N, Q>, ext: &[f64], base: i64, theta: f64, eps: f64, out: &mut [f64]) {
    let n = out.len();
    let r = (N - 1) / 2;
    let w = t.row_weights(theta);
    // flux[k'] for interior-relative cells k = i - m - 1, i = 0..=n
    let mut flux = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let k = (i as i64 + base - 1) as usize;
        flux.push(t.cell_flux(&ext[k - r - 1..k + r + 2], &w, eps));
    }
    for (i, o) in out.iter_mut().enumerate() {
        let k = (i as i64 + base) as usize;
        *o = ext[k] - flux[i + 1] + flux[i];
    }
}

/// Values at the feet `x_i - s` of an interior row under boundary condition `bc`.
pub fn reconstruct_shifted(values: &[f64], bc: Boundary, shift: f64, dx: f64, kind: ReconstructionKind) -> Result<Vec<f64>> {
    let rec = Reconstruction::new(kind, dx);
    let mut out = vec![0.0; values.len()];
    let mut scratch = Vec::new();
    rec.shift_row(values, bc, shift / dx, &mut scratch, &mut out)?;
    Ok(out)
}

/// Like [`reconstruct_shifted`] on caller-provided ghosted data.
pub fn reconstruct_shifted_ghosted(ext: &[f64], n_ghost: usize, shift: f64, dx: f64, kind: ReconstructionKind) -> Result<Vec<f64>> {
    if ext.len() < 2 * n_ghost {
        return Err(SolverError::InvalidParameter("ghosted row shorter than its ghost layers".into()));
    }
    let rec = Reconstruction::new(kind, dx);
    let mut out = vec![0.0; ext.len() - 2 * n_ghost];
    rec.shift_ghosted(ext, n_ghost, shift / dx, &mut out)?;
    Ok(out)
}

/// Convex combination of the two nodes bracketing each foot.
pub fn linear_interpolate(values: &[f64], bc: Boundary, shift: f64, dx: f64) -> Result<Vec<f64>> {
    reconstruct_shifted(values, bc, shift, dx, ReconstructionKind::Linear)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [ReconstructionKind; 3] = [ReconstructionKind::Linear, ReconstructionKind::Qcweno23, ReconstructionKind::Qcweno35];

    #[test]
    fn zero_shift_is_identity() {
        let v: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin()).collect();
        for kind in KINDS {
            assert_eq!(reconstruct_shifted(&v, Boundary::Periodic, 0.0, 0.1, kind).unwrap(), v);
            assert_eq!(reconstruct_shifted(&v, Boundary::FreeFlow, 0.0, 0.1, kind).unwrap(), v);
        }
    }

    #[test]
    fn integer_shift_is_circular() {
        let v: Vec<f64> = (0..10).map(|k| k as f64).collect();
        for kind in KINDS {
            let out = reconstruct_shifted(&v, Boundary::Periodic, 3.0 * 0.5, 0.5, kind).unwrap();
            for i in 0..10 {
                assert_eq!(out[i], v[(i + 10 - 3) % 10]);
            }
            let out = reconstruct_shifted(&v, Boundary::Periodic, -2.0 * 0.5, 0.5, kind).unwrap();
            for i in 0..10 {
                assert_eq!(out[i], v[(i + 2) % 10]);
            }
        }
    }

    #[test]
    fn linear_midpoint() {
        let out = linear_interpolate(&[0.0, 1.0, 0.0, 1.0], Boundary::Periodic, 0.5, 1.0).unwrap();
        assert_eq!(out[1], 0.5);
        let out = linear_interpolate(&[1.0, 2.0, 3.0, 4.0], Boundary::Periodic, 0.0, 1.0).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn tables_reproduce_their_averages() {
        let t = CwenoTables::<5, 3>::new(0.5);
        let s = [0.3, -1.0, 2.0, 0.5, 4.0];
        let c = t.optimal_coefficients(&s);
        for (k, r) in (-2..=2).enumerate() {
            let avg: f64 = (0..5).map(|n| c[n] * monomial_average(r as f64, n)).sum();
            assert!((avg - s[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_of_quadratic_matches_closed_form() {
        let b = indicator_matrix::<3>();
        let c = [0.0, 0.7, -1.3];
        let beta = quad_form(&b, &c);
        assert!((beta - (0.49 + 13.0 / 3.0 * 1.69)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_exact_in_interior_free_flow() {
        let n = 20;
        let dx = 1.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let s = 0.4 * dx;
        let out = reconstruct_shifted(&v, Boundary::FreeFlow, s, dx, ReconstructionKind::Qcweno23).unwrap();
        for i in 4..n - 4 {
            let x = xs[i] - s;
            assert!((out[i] - x * x).abs() < 1e-13, "cell {i}: {} vs {}", out[i], x * x);
        }
    }

    #[test]
    fn stencil_out_of_range_reported() {
        let rec = Reconstruction::new(ReconstructionKind::Qcweno35, 0.1);
        let ext = vec![1.0; 10 + 2 * 2];
        let mut out = vec![0.0; 10];
        let err = rec.shift_ghosted(&ext, 2, 0.5, &mut out).unwrap_err();
        assert!(matches!(err, SolverError::StencilOutOfRange { needed: 4, available: 2 }));
    }

    #[test]
    fn split_shift_ranges() {
        assert_eq!(split_shift(2.0), (2, 0.0));
        let (m, t) = split_shift(-0.25);
        assert_eq!(m, -1);
        assert!((t - 0.75).abs() < 1e-15);
    }
}
