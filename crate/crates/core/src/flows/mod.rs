//! Extremal trajectories and the Moser homotopy.

mod extremal;
mod moser;

use thiserror::Error;

use crate::expr::ParseError;
use crate::invariants::InvariantError;
use crate::systems::SystemError;

pub use extremal::{
    extremal_flow, extremal_flow_with_checkpoints, zermelo_closed_form_flow, ExtremalTrajectory, FlowConfig,
    FlowStatus, TrajectorySample,
};
pub use moser::{
    generate_commuting_system, moser_field, moser_transport, transported_system, GenerateConfig, MoserFamily, TransportConfig,
    TransportedVelocity,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid Moser family: {0}")]
    InvalidFamily(String),
    #[error("transport from u={u_from} to u={u_to} exceeded {bound:e}")]
    BlowUp { u_from: f64, u_to: f64, bound: f64 },
    #[error("transport Jacobian is singular at u={u}")]
    SingularJacobian { u: f64 },
    #[error("{0}")]
    Config(String),
}

impl From<crate::expr::EvalError> for FlowError {
    fn from(e: crate::expr::EvalError) -> Self {
        FlowError::System(e.into())
    }
}
