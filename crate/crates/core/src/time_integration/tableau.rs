//! Butcher tableaux of the diagonally implicit Runge-Kutta schemes and
//! coefficient sets of the backward differentiation formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// Lower-triangular, stiffly accurate DIRK tableau. The weights equal the last
/// row of `a`, so the step output is the last stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DirkTableau {
    pub label: &'static str,
    pub a: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

/// `gamma` of the two-stage scheme, `1 - sqrt(2)/2`.
pub const DIRK2_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// `gamma` of the three-stage scheme: the root in (1/6, 1/2) of
/// `6 g^3 - 18 g^2 + 9 g - 1 = 0`.
pub const DIRK3_GAMMA: f64 = 0.435_866_521_508_459;

impl DirkTableau {
    /// Validates the shape and structural properties and fills `c` from the row sums.
    pub fn new(label: &'static str, a: Vec<Vec<f64>>) -> Result<Self> {
        let s = a.len();
        if s == 0 {
            return Err(SolverError::InvalidParameter("tableau needs at least one stage".into()));
        }
        for (k, row) in a.iter().enumerate() {
            if row.len() != s {
                return Err(SolverError::InvalidParameter(format!(
                    "tableau row {k} has {} entries, expected {s}",
                    row.len()
                )));
            }
            if row[k + 1..].iter().any(|x| *x != 0.0) {
                return Err(SolverError::InvalidParameter("tableau must be lower triangular".into()));
            }
            if !(row[k] > 0.0) {
                return Err(SolverError::InvalidParameter(format!("diagonal entry a[{k}][{k}] must be positive")));
            }
        }
        let c: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
        if (c[s - 1] - 1.0).abs() > 1e-14 {
            return Err(SolverError::InvalidParameter("last row must sum to one (stiff accuracy)".into()));
        }
        Ok(Self { label, a, c })
    }

    /// Implicit Euler, `A = [1]`.
    pub fn first_order() -> Self {
        Self::new("DIRK1", vec![vec![1.0]]).expect("valid tableau")
    }

    pub fn dirk2() -> Self {
        let g = DIRK2_GAMMA;
        Self::new("DIRK2", vec![vec![g, 0.0], vec![1.0 - g, g]]).expect("valid tableau")
    }

    pub fn dirk3() -> Self {
        let g = DIRK3_GAMMA;
        let b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
        let b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
        Self::new("DIRK3", vec![vec![g, 0.0, 0.0], vec![(1.0 - g) / 2.0, g, 0.0], vec![b1, b2, g]]).expect("valid tableau")
    }

    pub fn stages(&self) -> usize {
        self.a.len()
    }

    /// Weights `b` (the last row).
    pub fn weights(&self) -> &[f64] {
        &self.a[self.stages() - 1]
    }

    /// Stability function `R(z) = 1 + z b^T (I - z A)^{-1} 1`.
    pub fn stability(&self, z: f64) -> f64 {
        let s = self.stages();
        // forward substitution for (I - z A) y = 1
        let mut y = vec![0.0; s];
        for k in 0..s {
            let acc: f64 = 1.0 + z * (0..k).map(|l| self.a[k][l] * y[l]).sum::<f64>();
            y[k] = acc / (1.0 - z * self.a[k][k]);
        }
        1.0 + z * self.weights().iter().zip(&y).map(|(b, y)| b * y).sum::<f64>()
    }

    /// `R(-inf)`; zero for a stiffly accurate tableau with nonsingular `A`.
    pub fn stability_at_infinity(&self) -> f64 {
        let s = self.stages();
        // R(inf) = 1 - b^T A^{-1} 1
        let mut y = vec![0.0; s];
        for k in 0..s {
            let acc = 1.0 - (0..k).map(|l| self.a[k][l] * y[l]).sum::<f64>();
            y[k] = acc / self.a[k][k];
        }
        1.0 - self.weights().iter().zip(&y).map(|(b, y)| b * y).sum::<f64>()
    }
}

/// How the first `s - 1` steps of an `s`-step BDF are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdfStartup {
    /// DIRK scheme of the same order.
    #[default]
    SameOrderDirk,
    /// Implicit Euler with the BDF's reconstruction.
    FirstOrder,
}

/// `f^{n+1} = sum_k alpha_k f^{n+1-k} + beta dt (tau/eps) (G - f^{n+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub startup: BdfStartup,
}

impl BdfScheme {
    pub fn new(alpha: Vec<f64>, beta: f64, startup: BdfStartup) -> Result<Self> {
        if alpha.is_empty() {
            return Err(SolverError::InvalidParameter("BDF needs at least one step".into()));
        }
        if (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(SolverError::InvalidParameter("BDF coefficients must sum to one".into()));
        }
        if !(beta > 0.0) {
            return Err(SolverError::InvalidParameter("BDF beta must be positive".into()));
        }
        Ok(Self { alpha, beta, startup })
    }

    pub fn bdf1() -> Self {
        Self::new(vec![1.0], 1.0, BdfStartup::SameOrderDirk).expect("valid BDF")
    }

    pub fn bdf2() -> Self {
        Self::new(vec![4.0 / 3.0, -1.0 / 3.0], 2.0 / 3.0, BdfStartup::SameOrderDirk).expect("valid BDF")
    }

    pub fn bdf3() -> Self {
        Self::new(vec![18.0 / 11.0, -9.0 / 11.0, 2.0 / 11.0], 6.0 / 11.0, BdfStartup::SameOrderDirk).expect("valid BDF")
    }

    pub fn with_startup(mut self, startup: BdfStartup) -> Self {
        self.startup = startup;
        self
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// Tableau used to fill the history.
    pub fn startup_tableau(&self) -> DirkTableau {
        match (self.startup, self.steps()) {
            (BdfStartup::FirstOrder, _) | (_, 1) => DirkTableau::first_order(),
            (_, 2) => DirkTableau::dirk2(),
            _ => DirkTableau::dirk3(),
        }
    }
}
