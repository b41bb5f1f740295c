use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::grid::{Boundary, CflSpec, SpatialGrid, VelocityGrid};
use crate::moments::{ModelParams, TauLaw};
use crate::projection::WeightKind;
use crate::reconstruction::ReconstructionKind;
use crate::relaxation::ProjectionMode;
use crate::time_integration::{BdfStartup, SchemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Accuracy,
    Riemann,
    Lax,
    Custom,
}

/// Macroscopic state `(rho, u, T)` of a Maxwellian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: [f64; 3],
    pub temperature: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: [f64; 3], temperature: f64) -> Self {
        Self { rho, u, temperature }
    }
}

/// Two constant states separated at `x_jump` (left state for `x <= x_jump`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateInit {
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub x_jump: f64,
}

/// Every knob of a run. Serialized as flat JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub problem: ProblemKind,
    pub epsilon: f64,
    pub nu: f64,
    pub tau_law: TauLaw,
    pub dim: usize,
    pub n_x: usize,
    pub n_v: usize,
    pub v_max: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub bc: Boundary,
    pub cfl: f64,
    pub t_final: f64,
    pub scheme: SchemeKind,
    pub reconstruction: ReconstructionKind,
    pub projection: bool,
    pub projection_weights: WeightKind,
    #[serde(default)]
    pub bdf_startup: BdfStartup,
    /// Parameter of the smooth accuracy profile.
    pub sigma: f64,
    /// Initial data for two-state problems (Riemann, Lax and custom).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_state: Option<TwoStateInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Weights used by default for the projection.
pub const DEFAULT_WEIGHTS: WeightKind = WeightKind::LocalGaussian;

impl ProblemConfig {
    /// Smooth periodic problem of the convergence study.
    pub fn accuracy(epsilon: f64, scheme: SchemeKind, n_x: usize) -> Self {
        Self {
            problem: ProblemKind::Accuracy,
            epsilon,
            nu: -1.0,
            tau_law: TauLaw::Constant { tau: 1.0 },
            dim: 2,
            n_x,
            n_v: 32,
            v_max: 10.0,
            x_left: -1.0,
            x_right: 1.0,
            bc: Boundary::Periodic,
            cfl: 4.0,
            t_final: 0.32,
            scheme,
            reconstruction: scheme.default_reconstruction(),
            projection: true,
            projection_weights: DEFAULT_WEIGHTS,
            bdf_startup: BdfStartup::SameOrderDirk,
            sigma: 10.0,
            two_state: None,
            out_dir: None,
        }
    }

    /// Mach 2.5 shock tube on `[-1, 2]` with `d = 2`.
    pub fn riemann(epsilon: f64, scheme: SchemeKind) -> Self {
        let n_v = if epsilon >= 0.5 { 160 } else { 96 };
        let mach = 2.5;
        Self {
            problem: ProblemKind::Riemann,
            epsilon,
            nu: -1.0,
            tau_law: TauLaw::Density {
                c: 0.9 * std::f64::consts::PI / 2.0,
            },
            dim: 2,
            n_x: 200,
            n_v,
            v_max: 15.0,
            x_left: -1.0,
            x_right: 2.0,
            bc: Boundary::FreeFlow,
            cfl: 2.0,
            t_final: 0.4,
            scheme,
            reconstruction: scheme.default_reconstruction(),
            projection: true,
            projection_weights: DEFAULT_WEIGHTS,
            bdf_startup: BdfStartup::SameOrderDirk,
            sigma: 10.0,
            two_state: Some(TwoStateInit {
                left: PrimitiveState::new(1.0, [mach * 2f64.sqrt(), 0.0, 0.0], 1.0),
                right: PrimitiveState::new(0.125, [0.0; 3], 0.25),
                x_jump: 0.5,
            }),
            out_dir: None,
        }
    }

    /// Lax shock tube on `[-5, 5]` with `d = 3`.
    pub fn lax(epsilon: f64, scheme: SchemeKind) -> Self {
        Self {
            problem: ProblemKind::Lax,
            epsilon,
            nu: -0.5,
            tau_law: TauLaw::DensitySqrtT { c: 2.0 / 3.0 },
            dim: 3,
            n_x: 200,
            n_v: 40,
            v_max: 20.0,
            x_left: -5.0,
            x_right: 5.0,
            bc: Boundary::FreeFlow,
            cfl: 2.0,
            t_final: 1.3,
            scheme,
            reconstruction: scheme.default_reconstruction(),
            projection: true,
            projection_weights: DEFAULT_WEIGHTS,
            bdf_startup: BdfStartup::SameOrderDirk,
            sigma: 10.0,
            two_state: Some(TwoStateInit {
                left: PrimitiveState::new(0.445, [0.698, 0.0, 0.0], 3.528),
                right: PrimitiveState::new(0.5, [0.0; 3], 0.571),
                x_jump: 0.0,
            }),
            out_dir: None,
        }
    }

    pub fn with_scheme(mut self, scheme: SchemeKind) -> Self {
        self.scheme = scheme;
        self.reconstruction = scheme.default_reconstruction();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.spatial_grid()?;
        self.velocity_grid()?;
        CflSpec::new(self.cfl)?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("final time must be nonnegative, got {}", self.t_final)));
        }
        if !(self.sigma > 0.0) {
            return Err(SolverError::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        let needs_states = !matches!(self.problem, ProblemKind::Accuracy);
        if needs_states && self.two_state.is_none() {
            return Err(SolverError::InvalidParameter("two-state problems need initial states".into()));
        }
        if let Some(ts) = &self.two_state {
            for s in [ts.left, ts.right] {
                if !(s.rho > 0.0 && s.temperature > 0.0) {
                    return Err(SolverError::InvalidParameter("initial states need positive density and temperature".into()));
                }
            }
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.nu, self.epsilon, self.tau_law, self.dim)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.x_left, self.x_right, self.n_x, self.bc)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.v_max, self.n_v, self.dim)
    }

    pub fn projection_mode(&self) -> ProjectionMode {
        if self.projection {
            ProjectionMode::On(self.projection_weights)
        } else {
            ProjectionMode::Off
        }
    }

    pub fn time_step(&self) -> Result<f64> {
        Ok(CflSpec::new(self.cfl)?.time_step(&self.spatial_grid()?, &self.velocity_grid()?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
