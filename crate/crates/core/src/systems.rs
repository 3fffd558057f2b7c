//! Concrete families of planar control systems `q̇ = f(q, u)`.
//!
//! Every family is lowered to a pair of velocity expressions at construction,
//! so the invariant machinery sees one uniform interface. Families also keep
//! their defining data for the closed-form quantities below.
//!
//! Frame structure constants follow the convention
//! `[e1, e2] = −(c1·e1 + c2·e2)`. With it the Zermelo closed-form field
//! `X + cos u·e1 + sin u·e2 − c_Z·∂_u` with zero drift integrates to the same
//! geodesics as the general engine (checked on the hyperbolic half-plane in
//! `tests/zermelo_calibration.rs`).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expression, Jet, Var};
use crate::fd::{self, FdConfig};
use crate::invariants::{self, InvariantConfig, InvariantError};
use crate::linalg::{self, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("navigation condition violated at q=({q1}, {q2}), u={u}: {detail}")]
    Navigation { q1: f64, q2: f64, u: f64, detail: String },
    #[error("frame is singular at q=({q1}, {q2}) (det = {det:e})")]
    SingularFrame { q1: f64, q2: f64, det: f64 },
    #[error("control value {u} outside the control domain")]
    OutOfDomain { u: f64 },
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ControlDomain {
    /// Angles with period 2π.
    Circle,
    Interval { lo: f64, hi: f64 },
}

impl ControlDomain {
    pub fn contains(&self, u: f64) -> bool {
        match *self {
            ControlDomain::Circle => u.is_finite(),
            ControlDomain::Interval { lo, hi } => u >= lo && u <= hi,
        }
    }
}

/// A u-independent frame `(e1, e2)` given by coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub e1: [Expression; 2],
    pub e2: [Expression; 2],
}

fn jets2(pair: &[Expression; 2], q: Vec2, u: f64) -> Result<[Jet; 2], EvalError> {
    Ok([pair[0].eval_jet(q[0], q[1], u)?, pair[1].eval_jet(q[0], q[1], u)?])
}

fn values2(pair: &[Expression; 2], q: Vec2) -> Result<Vec2, EvalError> {
    Ok([pair[0].eval(q[0], q[1], 0.0)?, pair[1].eval(q[0], q[1], 0.0)?])
}

/// `[X, Y] = (∂Y/∂q)·X − (∂X/∂q)·Y` from q-jets.
pub fn lie_bracket(x: &[Jet; 2], y: &[Jet; 2]) -> Vec2 {
    let xv = [x[0].value, x[1].value];
    let yv = [y[0].value, y[1].value];
    [
        linalg::dot(y[0].dq(), xv) - linalg::dot(x[0].dq(), yv),
        linalg::dot(y[1].dq(), xv) - linalg::dot(x[1].dq(), yv),
    ]
}

const FRAME_TOL: f64 = 1e-12;

impl FramePair {
    pub fn new(e1: [Expression; 2], e2: [Expression; 2]) -> Self {
        FramePair { e1, e2 }
    }

    pub fn parse(e1: [&str; 2], e2: [&str; 2]) -> Result<Self, crate::expr::ParseError> {
        Ok(FramePair {
            e1: [Expression::parse(e1[0])?, Expression::parse(e1[1])?],
            e2: [Expression::parse(e2[0])?, Expression::parse(e2[1])?],
        })
    }

    /// `∂/∂q1, ∂/∂q2`.
    pub fn euclidean() -> Self {
        Self::parse(["1", "0"], ["0", "1"]).expect("literal frame")
    }

    /// `q2·∂/∂q1, q2·∂/∂q2` on `q2 > 0`; Gaussian curvature −1.
    pub fn hyperbolic_half_plane() -> Self {
        Self::parse(["q2", "0"], ["0", "q2"]).expect("literal frame")
    }

    /// `∂/∂q1, (1/sin q1)·∂/∂q2` on `0 < q1 < π`; Gaussian curvature +1.
    pub fn round_sphere() -> Self {
        Self::parse(["1", "0"], ["0", "1/sin(q1)"]).expect("literal frame")
    }

    pub fn at(&self, q: Vec2) -> Result<(Vec2, Vec2), EvalError> {
        Ok((values2(&self.e1, q)?, values2(&self.e2, q)?))
    }

    pub fn jets(&self, q: Vec2) -> Result<([Jet; 2], [Jet; 2]), EvalError> {
        Ok((jets2(&self.e1, q, 0.0)?, jets2(&self.e2, q, 0.0)?))
    }

    /// `(a, b)` with `[e1, e2] = a·e1 + b·e2`.
    pub fn bracket_coefficients(&self, q: Vec2) -> Result<(f64, f64), SystemError> {
        let (j1, j2) = self.jets(q)?;
        let br = lie_bracket(&j1, &j2);
        let e1 = [j1[0].value, j1[1].value];
        let e2 = [j2[0].value, j2[1].value];
        linalg::expand(br, e1, e2, FRAME_TOL)
            .ok_or(SystemError::SingularFrame { q1: q[0], q2: q[1], det: linalg::det(e1, e2) })
    }

    /// Coordinate-free Gaussian curvature of the metric that makes the frame
    /// orthonormal: `K = e1(b) − e2(a) − a² − b²` for `[e1, e2] = a·e1 + b·e2`.
    /// Derivatives of `a, b` are Richardson central differences.
    pub fn gaussian_curvature(&self, q: Vec2, cfg: FdConfig) -> Result<f64, SystemError> {
        let (e1, e2) = self.at(q)?;
        let (a, b) = self.bracket_coefficients(q)?;
        let e1_b = fd::derivative(cfg, |t| {
            self.bracket_coefficients(linalg::add(q, linalg::scale(t, e1))).map(|c| c.1)
        })?;
        let e2_a = fd::derivative(cfg, |t| {
            self.bracket_coefficients(linalg::add(q, linalg::scale(t, e2))).map(|c| c.0)
        })?;
        Ok(e1_b - e2_a - a * a - b * b)
    }

    fn area_det(&self, q: Vec2) -> Result<f64, SystemError> {
        let (e1, e2) = self.at(q)?;
        Ok(linalg::det(e1, e2))
    }
}

/// Structure constants `(c1, c2)` with `[e1, e2] = −(c1·e1 + c2·e2)`.
pub fn frame_structure_constants(frame: &FramePair, q: Vec2) -> Result<(f64, f64), SystemError> {
    let (a, b) = frame.bracket_coefficients(q)?;
    Ok((-a, -b))
}

/// Drift given in frame components `X1 = ⟨X, e1⟩`, `X2 = ⟨X, e2⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZermeloData {
    pub frame: FramePair,
    pub x1: Expression,
    pub x2: Expression,
}

impl ZermeloData {
    pub fn new(frame: FramePair, x1: Expression, x2: Expression) -> Self {
        ZermeloData { frame, x1, x2 }
    }

    /// Convert a drift given in coordinate components by Cramer's rule on the frame.
    pub fn from_coordinate_drift(frame: FramePair, drift: [Expression; 2]) -> Self {
        let [a1, a2] = frame.e1.clone();
        let [b1, b2] = frame.e2.clone();
        let det = a1.clone() * b2.clone() - a2.clone() * b1.clone();
        let [d1, d2] = drift;
        let x1 = (d1.clone() * b2 - d2.clone() * b1) / det.clone();
        let x2 = (a1 * d2 - a2 * d1) / det;
        ZermeloData { frame, x1, x2 }
    }

    fn velocity(&self) -> [Expression; 2] {
        let c = Expression::u().cos() + self.x1.clone();
        let s = Expression::u().sin() + self.x2.clone();
        [
            c.clone() * self.frame.e1[0].clone() + s.clone() * self.frame.e2[0].clone(),
            c * self.frame.e1[1].clone() + s * self.frame.e2[1].clone(),
        ]
    }
}

/// One-form given in frame components `ups1 = ⟨Υ, e1⟩`, `ups2 = ⟨Υ, e2⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoZermeloData {
    pub frame: FramePair,
    pub ups1: Expression,
    pub ups2: Expression,
}

impl CoZermeloData {
    pub fn new(frame: FramePair, ups1: Expression, ups2: Expression) -> Self {
        CoZermeloData { frame, ups1, ups2 }
    }

    /// Convert `Υ = Υ_1 dq1 + Υ_2 dq2` to frame components.
    pub fn from_coordinate_form(frame: FramePair, form: [Expression; 2]) -> Self {
        let pair = |e: &[Expression; 2]| form[0].clone() * e[0].clone() + form[1].clone() * e[1].clone();
        let ups1 = pair(&frame.e1);
        let ups2 = pair(&frame.e2);
        CoZermeloData { frame, ups1, ups2 }
    }

    /// `φ(q, u) = 1 + cos u·ups1 + sin u·ups2`.
    pub fn phi(&self) -> Expression {
        1.0 + Expression::u().cos() * self.ups1.clone() + Expression::u().sin() * self.ups2.clone()
    }

    fn velocity(&self) -> [Expression; 2] {
        let phi = self.phi();
        let c = Expression::u().cos();
        let s = Expression::u().sin();
        [
            (c.clone() * self.frame.e1[0].clone() + s.clone() * self.frame.e2[0].clone()) / phi.clone(),
            (c * self.frame.e1[1].clone() + s * self.frame.e2[1].clone()) / phi,
        ]
    }

    fn ups_at(&self, q: Vec2) -> Result<Vec2, EvalError> {
        Ok([self.ups1.eval(q[0], q[1], 0.0)?, self.ups2.eval(q[0], q[1], 0.0)?])
    }

    /// Ω with `dΥ = −Ω dV_g`, from exact first derivatives:
    /// `Ω = −(e1(ups2) − e2(ups1) − a·ups1 − b·ups2)` for `[e1, e2] = a·e1 + b·e2`.
    pub fn omega(&self, q: Vec2) -> Result<f64, SystemError> {
        let (e1, e2) = self.frame.at(q)?;
        let (a, b) = self.frame.bracket_coefficients(q)?;
        let j1 = self.ups1.eval_jet(q[0], q[1], 0.0)?;
        let j2 = self.ups2.eval_jet(q[0], q[1], 0.0)?;
        let e1_ups2 = linalg::dot(j2.dq(), e1);
        let e2_ups1 = linalg::dot(j1.dq(), e2);
        Ok(-(e1_ups2 - e2_ups1 - a * j1.value - b * j2.value))
    }
}

/// Pluggable velocity source for systems not given by expressions.
pub trait VelocityModel: Send + Sync + fmt::Debug {
    fn velocity_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError>;

    /// Value and u-derivatives only; q-slots may be left at zero.
    fn velocity_u_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError> {
        self.velocity_jet(q, u)
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    General,
    Riemannian(FramePair),
    Zermelo(ZermeloData),
    CoZermelo(CoZermeloData),
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::General => "general",
            SystemKind::Riemannian(_) => "riemannian",
            SystemKind::Zermelo(_) => "zermelo",
            SystemKind::CoZermelo(_) => "cozermelo",
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Expressions([Expression; 2]),
    Model(Arc<dyn VelocityModel>),
}

/// A planar control system with jet access to its velocity field.
#[derive(Debug, Clone)]
pub struct ControlSystem2D {
    kind: SystemKind,
    source: Source,
    domain: ControlDomain,
    epsilon_hint: Option<f64>,
}

impl ControlSystem2D {
    pub fn general(f: [Expression; 2], domain: ControlDomain) -> Self {
        ControlSystem2D { kind: SystemKind::General, source: Source::Expressions(f), domain, epsilon_hint: None }
    }

    pub fn parse_general(f1: &str, f2: &str, domain: ControlDomain) -> Result<Self, crate::expr::ParseError> {
        Ok(Self::general([Expression::parse(f1)?, Expression::parse(f2)?], domain))
    }

    /// General-kind system backed by a custom velocity model.
    pub fn from_model(model: Arc<dyn VelocityModel>, domain: ControlDomain) -> Self {
        ControlSystem2D { kind: SystemKind::General, source: Source::Model(model), domain, epsilon_hint: None }
    }

    /// `f = cos u·e1 + sin u·e2`.
    pub fn riemannian(frame: FramePair) -> Self {
        let c = Expression::u().cos();
        let s = Expression::u().sin();
        let f = [
            c.clone() * frame.e1[0].clone() + s.clone() * frame.e2[0].clone(),
            c * frame.e1[1].clone() + s * frame.e2[1].clone(),
        ];
        ControlSystem2D {
            kind: SystemKind::Riemannian(frame),
            source: Source::Expressions(f),
            domain: ControlDomain::Circle,
            epsilon_hint: None,
        }
    }

    /// `f = X + cos u·e1 + sin u·e2`.
    pub fn zermelo(data: ZermeloData) -> Self {
        let f = data.velocity();
        ControlSystem2D {
            kind: SystemKind::Zermelo(data),
            source: Source::Expressions(f),
            domain: ControlDomain::Circle,
            epsilon_hint: None,
        }
    }

    /// `f = (cos u·e1 + sin u·e2) / φ`.
    pub fn cozermelo(data: CoZermeloData) -> Self {
        let f = data.velocity();
        ControlSystem2D {
            kind: SystemKind::CoZermelo(data),
            source: Source::Expressions(f),
            domain: ControlDomain::Circle,
            epsilon_hint: None,
        }
    }

    pub fn with_epsilon_hint(mut self, eps: f64) -> Self {
        self.epsilon_hint = Some(eps.signum());
        self
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn domain(&self) -> ControlDomain {
        self.domain
    }

    pub fn epsilon_hint(&self) -> Option<f64> {
        self.epsilon_hint
    }

    /// Velocity expressions, when the system is expression-backed.
    pub fn velocity_expressions(&self) -> Option<&[Expression; 2]> {
        match &self.source {
            Source::Expressions(f) => Some(f),
            Source::Model(_) => None,
        }
    }

    /// Same indicatrices, control relabelled `u ↦ u + shift` (a feedback
    /// transformation). Returns a General-kind system.
    pub fn with_control_shift(&self, shift: f64) -> Option<Self> {
        self.reparametrized(&(Expression::u() + shift))
    }

    /// Same indicatrices traversed backwards, `u ↦ −u`.
    pub fn with_reversed_control(&self) -> Option<Self> {
        self.reparametrized(&(-Expression::u()))
    }

    fn reparametrized(&self, new_u: &Expression) -> Option<Self> {
        let f = self.velocity_expressions()?;
        let g = [f[0].substitute(Var::U, new_u), f[1].substitute(Var::U, new_u)];
        let domain = match self.domain {
            ControlDomain::Circle => ControlDomain::Circle,
            ControlDomain::Interval { .. } => return None,
        };
        Some(ControlSystem2D { kind: SystemKind::General, source: Source::Expressions(g), domain, epsilon_hint: None })
    }

    fn admissible(&self, q: Vec2, u: f64) -> Result<(), SystemError> {
        if !self.domain.contains(u) {
            return Err(SystemError::OutOfDomain { u });
        }
        match &self.kind {
            SystemKind::CoZermelo(data) => {
                let phi = data.phi().eval(q[0], q[1], u)?;
                if !(phi > 0.0) {
                    return Err(SystemError::Navigation {
                        q1: q[0],
                        q2: q[1],
                        u,
                        detail: format!("φ = {phi} is not positive"),
                    });
                }
            }
            SystemKind::Zermelo(data) => {
                let x = [data.x1.eval(q[0], q[1], u)?, data.x2.eval(q[0], q[1], u)?];
                let n2 = linalg::dot(x, x);
                if !(n2 < 1.0) {
                    return Err(SystemError::Navigation {
                        q1: q[0],
                        q2: q[1],
                        u,
                        detail: format!("|X|² = {n2} is not below 1"),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Jets of `f1`, `f2` at `(q, u)`.
    pub fn velocity_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError> {
        self.admissible(q, u)?;
        match &self.source {
            Source::Expressions(f) => Ok(jets2(f, q, u)?),
            Source::Model(m) => m.velocity_jet(q, u),
        }
    }

    /// As [`velocity_jet`](Self::velocity_jet) without the q-derivatives.
    pub fn velocity_u_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError> {
        self.admissible(q, u)?;
        match &self.source {
            Source::Expressions(f) => Ok([f[0].eval_u_jet(q[0], q[1], u)?, f[1].eval_u_jet(q[0], q[1], u)?]),
            Source::Model(m) => m.velocity_u_jet(q, u),
        }
    }

    pub fn velocity(&self, q: Vec2, u: f64) -> Result<Vec2, SystemError> {
        match &self.source {
            Source::Expressions(f) if self.domain.contains(u) => Ok([f[0].eval(q[0], q[1], u)?, f[1].eval(q[0], q[1], u)?]),
            _ => self.velocity_jet(q, u).map(|j| [j[0].value, j[1].value]),
        }
    }
}

/// Closed-form Zermelo fibre rate: the Hamiltonian field restricted to the
/// level `h = 1` is `X + cos u·e1 + sin u·e2 − c_Z·∂_u` with
///
/// `c_Z = cos²u·L_{e2}X1 + cos u sin u·(L_{e2}X2 − L_{e1}X1) − sin²u·L_{e1}X2
///        + (1 + cos u·X1 + sin u·X2)(c1 cos u + c2 sin u)`.
///
/// The `sin²u` term carries a minus sign: that is what the costate equation
/// `λ̇ = −(∂f/∂q)ᵀλ` gives for the heading angle.
pub fn zermelo_cz(data: &ZermeloData, q: Vec2, u: f64) -> Result<f64, SystemError> {
    let (e1, e2) = data.frame.at(q)?;
    let (c1, c2) = frame_structure_constants(&data.frame, q)?;
    let jx1 = data.x1.eval_jet(q[0], q[1], u)?;
    let jx2 = data.x2.eval_jet(q[0], q[1], u)?;
    let e1_x1 = linalg::dot(jx1.dq(), e1);
    let e2_x1 = linalg::dot(jx1.dq(), e2);
    let e1_x2 = linalg::dot(jx2.dq(), e1);
    let e2_x2 = linalg::dot(jx2.dq(), e2);
    let (s, c) = u.sin_cos();
    Ok(c * c * e2_x1 + c * s * (e2_x2 - e1_x1) - s * s * e1_x2
        + (1.0 + c * jx1.value + s * jx2.value) * (c1 * c + c2 * s))
}

/// Co-Zermelo Hamiltonian `h(λ)` with all pairings in the frame metric.
/// `p` holds the coordinate components of the covector.
pub fn cozermelo_hamiltonian(data: &CoZermeloData, q: Vec2, p: Vec2) -> Result<f64, SystemError> {
    let (e1, e2) = data.frame.at(q)?;
    let lam = [linalg::dot(p, e1), linalg::dot(p, e2)];
    let ups = data.ups_at(q)?;
    let n2 = linalg::dot(ups, ups);
    if !(n2 < 1.0) {
        return Err(SystemError::Navigation { q1: q[0], q2: q[1], u: f64::NAN, detail: format!("|Υ|² = {n2}") });
    }
    let lu = linalg::dot(lam, ups);
    let l2 = linalg::dot(lam, lam);
    Ok((-lu + (lu * lu + (1.0 - n2) * l2).sqrt()) / (1.0 - n2))
}

/// Closed-form co-Zermelo curvature
///
/// `κ = φ⁻²(κ_g + Ω² + sin u·L_{e1}Ω − cos u·L_{e2}Ω − S(φ))`,
/// `S(φ) = φ·L_h(L_hφ/2) − (L_hφ/2)²`,
///
/// with κ_g the Gaussian curvature of the frame metric and `L_h` the Lie
/// derivative along the Hamiltonian field of the system. The formula is
/// established for a commuting frame and exact Υ; other inputs are
/// experimental and are compared against the general engine in the tests.
pub fn cozermelo_kappa_closed(
    data: &CoZermeloData,
    q: Vec2,
    u: f64,
    cfg: &InvariantConfig,
) -> Result<f64, InvariantError> {
    let sys = ControlSystem2D::cozermelo(data.clone());
    let phi = data.phi();
    let phi_at = |q: Vec2, u: f64| -> Result<f64, InvariantError> { Ok(phi.eval(q[0], q[1], u).map_err(SystemError::from)?) };
    let half_lh_phi = |q: Vec2, u: f64| -> Result<f64, InvariantError> {
        Ok(0.5 * invariants::lie_derivative_h(&sys, q, u, cfg, phi_at)?)
    };
    let p0 = phi_at(q, u)?;
    let g = half_lh_phi(q, u)?;
    let schwarz = p0 * invariants::lie_derivative_h(&sys, q, u, cfg, half_lh_phi)? - g * g;

    let (e1, e2) = data.frame.at(q).map_err(SystemError::from)?;
    let omega = data.omega(q)?;
    let along = |e: Vec2| fd::derivative(cfg.fd, |t| data.omega(linalg::add(q, linalg::scale(t, e))));
    let e1_omega = along(e1)?;
    let e2_omega = along(e2)?;
    let kg = data.frame.gaussian_curvature(q, cfg.fd)?;
    let (s, c) = u.sin_cos();
    Ok((kg + omega * omega + s * e1_omega - c * e2_omega - schwarz) / (p0 * p0))
}

impl fmt::Display for ControlSystem2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Expressions(e) => write!(f, "{} system f = ({}, {})", self.kind.name(), e[0], e[1]),
            Source::Model(m) => write!(f, "{} system backed by {m:?}", self.kind.name()),
        }
    }
}

/// Area-form determinant of the frame, exposed for diagnostics.
pub fn frame_determinant(frame: &FramePair, q: Vec2) -> Result<f64, SystemError> {
    frame.area_det(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn riemannian_flat_velocity() {
        let sys = ControlSystem2D::riemannian(FramePair::euclidean());
        let j = sys.velocity_jet([0.3, -0.4], 0.0).unwrap();
        assert_eq!([j[0].value, j[1].value], [1.0, 0.0]);
        assert_eq!([j[0].du, j[1].du], [0.0, 1.0]);
    }

    #[test]
    fn zermelo_drift_adds() {
        let data = ZermeloData::new(FramePair::euclidean(), Expression::constant(0.5), Expression::constant(0.0));
        let v = ControlSystem2D::zermelo(data).velocity([0.0, 0.0], FRAC_PI_2).unwrap();
        assert!(close(v[0], 0.5, 1e-15) && close(v[1], 1.0, 1e-15));
    }

    #[test]
    fn cozermelo_at_origin_is_the_unit_circle() {
        let data = CoZermeloData::new(FramePair::euclidean(), Expression::parse("2*q1").unwrap(), Expression::parse("2*q2").unwrap());
        let sys = ControlSystem2D::cozermelo(data);
        for k in 0..8 {
            let u = k as f64 * PI / 4.0;
            let v = sys.velocity([0.0, 0.0], u).unwrap();
            assert!(close(v[0], u.cos(), 1e-15) && close(v[1], u.sin(), 1e-15));
        }
        assert!(matches!(sys.velocity_jet([0.6, 0.0], PI), Err(SystemError::Navigation { .. })));
    }

    #[test]
    fn structure_constants_of_standard_frames() {
        assert_eq!(frame_structure_constants(&FramePair::euclidean(), [0.2, 0.1]).unwrap(), (0.0, 0.0));
        // [e1, e2] = −∂1 = −e1 at q2 = 1
        let (c1, c2) = frame_structure_constants(&FramePair::hyperbolic_half_plane(), [0.0, 1.0]).unwrap();
        assert!(close(c1, 1.0, 1e-15) && close(c2, 0.0, 1e-15));
        // bracket ∝ cos q1 vanishes on the equator
        let (c1, c2) = frame_structure_constants(&FramePair::round_sphere(), [FRAC_PI_2, 0.3]).unwrap();
        assert!(close(c1, 0.0, 1e-15) && close(c2, 0.0, 1e-15));
        let singular = FramePair::parse(["1", "0"], ["2", "0"]).unwrap();
        assert!(matches!(frame_structure_constants(&singular, [0.0, 0.0]), Err(SystemError::SingularFrame { .. })));
    }

    #[test]
    fn gaussian_curvature_of_standard_frames() {
        let cfg = FdConfig::default();
        assert_eq!(FramePair::euclidean().gaussian_curvature([0.1, 0.2], cfg).unwrap(), 0.0);
        let k = FramePair::hyperbolic_half_plane().gaussian_curvature([0.3, 0.7], cfg).unwrap();
        assert!(close(k, -1.0, 1e-8), "{k}");
        let k = FramePair::round_sphere().gaussian_curvature([1.1, 0.3], cfg).unwrap();
        assert!(close(k, 1.0, 1e-8), "{k}");
    }

    #[test]
    fn cz_closed_form_cases() {
        let flat = FramePair::euclidean();
        let constant = ZermeloData::new(flat.clone(), Expression::constant(0.3), Expression::constant(0.1));
        for k in 0..12 {
            let u = k as f64 * 0.5;
            assert_eq!(zermelo_cz(&constant, [0.2, -0.1], u).unwrap(), 0.0);
        }
        let hyper = ZermeloData::new(FramePair::hyperbolic_half_plane(), Expression::constant(0.0), Expression::constant(0.0));
        let u = 0.7;
        assert!(close(zermelo_cz(&hyper, [0.0, 1.0], u).unwrap(), u.cos(), 1e-15));
        let shear = ZermeloData::new(flat, Expression::q2(), Expression::constant(0.0));
        assert!(close(zermelo_cz(&shear, [0.0, 0.2], 0.0).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn coordinate_drift_conversion() {
        let frame = FramePair::hyperbolic_half_plane();
        let data = ZermeloData::from_coordinate_drift(frame, [Expression::constant(0.2), Expression::constant(0.1)]);
        // X = 0.2 ∂1 + 0.1 ∂2 = (0.2/q2) e1 + (0.1/q2) e2
        assert!(close(data.x1.eval(0.0, 2.0, 0.0).unwrap(), 0.1, 1e-15));
        assert!(close(data.x2.eval(0.0, 2.0, 0.0).unwrap(), 0.05, 1e-15));
    }

    #[test]
    fn cozermelo_hamiltonian_cases() {
        let zero = CoZermeloData::new(FramePair::euclidean(), Expression::constant(0.0), Expression::constant(0.0));
        assert!(close(cozermelo_hamiltonian(&zero, [0.0, 0.0], [3.0, 4.0]).unwrap(), 5.0, 1e-14));
        let a = 0.4;
        let aligned = CoZermeloData::new(FramePair::euclidean(), Expression::constant(a), Expression::constant(0.0));
        let h = cozermelo_hamiltonian(&aligned, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!(close(h, 1.0 / (1.0 + a), 1e-14));
        let p = [0.3, -0.8];
        let h1 = cozermelo_hamiltonian(&aligned, [0.0, 0.0], p).unwrap();
        let h2 = cozermelo_hamiltonian(&aligned, [0.0, 0.0], [2.0 * p[0], 2.0 * p[1]]).unwrap();
        assert!(close(h2, 2.0 * h1, 1e-14));
    }

    #[test]
    fn cozermelo_hamiltonian_is_the_maximised_pairing() {
        let data = CoZermeloData::from_coordinate_form(FramePair::hyperbolic_half_plane(), [Expression::parse("0.3*q1").unwrap(), Expression::parse("0.2").unwrap()]);
        let sys = ControlSystem2D::cozermelo(data.clone());
        let q = [0.5, 1.2];
        let p = [0.7, -0.4];
        let h = cozermelo_hamiltonian(&data, q, p).unwrap();
        let mut best = f64::MIN;
        for k in 0..200_000 {
            let u = k as f64 * 2.0 * PI / 200_000.0;
            best = best.max(linalg::dot(p, sys.velocity(q, u).unwrap()));
        }
        assert!(close(h, best, 1e-9), "{h} vs {best}");
    }

    #[test]
    fn omega_vanishes_for_exact_forms() {
        let data = CoZermeloData::from_coordinate_form(FramePair::euclidean(), [Expression::parse("2*q1").unwrap(), Expression::parse("2*q2").unwrap()]);
        assert_eq!(data.omega([0.1, 0.2]).unwrap(), 0.0);
        let rot = CoZermeloData::from_coordinate_form(FramePair::euclidean(), [Expression::parse("-0.2*q2").unwrap(), Expression::parse("0.2*q1").unwrap()]);
        // dΥ = 0.4 dq1∧dq2 = −Ω dV
        assert!(close(rot.omega([0.1, 0.2]).unwrap(), -0.4, 1e-15));
    }
}
