use serde::{Deserialize, Serialize};

use crate::invariants::{self, InvariantConfig};
use crate::linalg::Vec2;
use crate::ode::{Dopri5, StepStats, Stop};
use crate::systems::{zermelo_cz, ControlSystem2D, SystemError, ZermeloData};

use super::FlowError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub integrator: Dopri5,
    pub invariants: InvariantConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { integrator: Dopri5::default(), invariants: InvariantConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: Vec2,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlowStatus {
    Completed,
    RegularityLost { t: f64, reason: String },
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub meta: StepStats,
    pub status: FlowStatus,
}

impl ExtremalTrajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory holds its initial sample")
    }

    /// Linear interpolation of the state at time `t` within the sampled range.
    pub fn state_at(&self, t: f64) -> Option<(Vec2, f64)> {
        let i = self.samples.partition_point(|s| s.t < t);
        let s = self.samples.get(i)?;
        if s.t == t || i == 0 {
            return (s.t == t).then_some((s.q, s.u));
        }
        let a = &self.samples[i - 1];
        let w = (t - a.t) / (s.t - a.t);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        Some(([lerp(a.q[0], s.q[0]), lerp(a.q[1], s.q[1])], lerp(a.u, s.u)))
    }
}

fn run<E: ToString>(
    cfg: &FlowConfig,
    q0: Vec2,
    u0: f64,
    t_end: f64,
    checkpoints: &[f64],
    field: impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3], E>,
) -> ExtremalTrajectory {
    let sol = cfg.integrator.integrate(field, 0.0, t_end, [q0[0], q0[1], u0], checkpoints);
    let samples =
        sol.t.iter().zip(&sol.y).map(|(&t, y)| TrajectorySample { t, q: [y[0], y[1]], u: y[2] }).collect();
    let status = match sol.stop {
        Stop::Completed => FlowStatus::Completed,
        Stop::Rhs { t, error } => FlowStatus::RegularityLost { t, reason: error.to_string() },
        Stop::StepUnderflow { t } => FlowStatus::StepUnderflow { t },
        Stop::TooManySteps { t } => FlowStatus::TooManySteps { t },
    };
    ExtremalTrajectory { samples, meta: sol.stats, status }
}

/// Integrate `q̇ = f(q, u)`, `u̇ = −c/θ′` from `(q0, u0)` over `[0, t_end]`.
///
/// Fails only if the initial point is irregular; later failures stop the
/// trajectory and are reported in its status.
pub fn extremal_flow(
    sys: &ControlSystem2D,
    q0: Vec2,
    u0: f64,
    t_end: f64,
    cfg: &FlowConfig,
) -> Result<ExtremalTrajectory, FlowError> {
    extremal_flow_with_checkpoints(sys, q0, u0, t_end, &[], cfg)
}

/// As [`extremal_flow`], with samples forced at the given times.
pub fn extremal_flow_with_checkpoints(
    sys: &ControlSystem2D,
    q0: Vec2,
    u0: f64,
    t_end: f64,
    checkpoints: &[f64],
    cfg: &FlowConfig,
) -> Result<ExtremalTrajectory, FlowError> {
    if !(t_end > 0.0) {
        return Err(FlowError::Config(format!("t_end must be positive, got {t_end}")));
    }
    invariants::hamiltonian_field(sys, q0, u0, &cfg.invariants)?;
    Ok(run(cfg, q0, u0, t_end, checkpoints, |_, y| {
        invariants::hamiltonian_field(sys, [y[0], y[1]], y[2], &cfg.invariants)
    }))
}

/// Zermelo extremals from the closed-form field `X + cos u·e1 + sin u·e2 − c_Z·∂_u`.
pub fn zermelo_closed_form_flow(
    data: &ZermeloData,
    q0: Vec2,
    u0: f64,
    t_end: f64,
    checkpoints: &[f64],
    cfg: &FlowConfig,
) -> Result<ExtremalTrajectory, FlowError> {
    if !(t_end > 0.0) {
        return Err(FlowError::Config(format!("t_end must be positive, got {t_end}")));
    }
    let sys = ControlSystem2D::zermelo(data.clone());
    let field = |_: f64, y: &[f64; 3]| -> Result<[f64; 3], SystemError> {
        let q = [y[0], y[1]];
        let f = sys.velocity(q, y[2])?;
        Ok([f[0], f[1], -zermelo_cz(data, q, y[2])?])
    };
    let probe = field;
    probe(0.0, &[q0[0], q0[1], u0])?;
    Ok(run(cfg, q0, u0, t_end, checkpoints, probe))
}
