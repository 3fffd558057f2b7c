//! Feedback invariants of a planar control system.
//!
//! Along the fibre `u ↦ f(q, u)` the covector λ with `⟨λ, f⟩ = ε`,
//! `⟨λ, ∂f/∂u⟩ = 0` satisfies `λ_uu = α·λ + β·λ_u`. The natural parameter has
//! rate `θ′ = sqrt|α|`, `ε = −sign α`, and the centro-affine curvature is
//! `b = β/θ′ − θ″/θ′²`.
//!
//! On the three-dimensional level set, coordinatised by `(q, u)`, the fields are
//! `v = (0, 1/θ′)` and `h = (f, −c/θ′)`, where `c` comes from
//! `[f, f′] = −ε·c·f + d·f′` at fixed u. Then
//!
//! * `h′ = [v, h] = (f′, −c₁/θ′)` with `c₁ = ∂_θ c − (L_f θ′)/θ′`,
//! * `κ = L_{f′}c − c₁² − L_f c₁ + c·∂_θ c₁ − c·(L_{f′}θ′)/θ′`,
//!
//! where `L_f`, `L_{f′}` act on q at fixed u and `∂_θ = (1/θ′)∂_u`. The pair
//! `(c, c₁)` is the structure coefficient and its θ-derivative in the gauge
//! whose θ-slices contain the u-slice through the sample point, so `c₁` is
//! what the sample reports as `c′`. In that gauge `c″ = ∂_θ c₁ − (L_{f′}θ′)/θ′`.
//!
//! Exact jets give everything at a single point; derivatives of derived
//! scalars are Richardson central differences with [`FdConfig`].

mod bracket;
mod fiber;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fd::{self, FdConfig};
use crate::linalg::Vec2;
use crate::systems::{ControlSystem2D, SystemError};

pub use bracket::BracketOracle;
pub(crate) use fiber::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("regularity violated at q=({q1}, {q2}), u={u}: w1={w1:e}, w2={w2:e}")]
    Regularity { q1: f64, q2: f64, u: f64, w1: f64, w2: f64 },
    #[error("convexity degenerate at q=({q1}, {q2}), u={u}: α={alpha:e}")]
    ConvexityDegenerate { q1: f64, q2: f64, u: f64, alpha: f64 },
    #[error("λ and λ_u collinear at q=({q1}, {q2}), u={u}")]
    CollinearCovector { q1: f64, q2: f64, u: f64 },
    #[error("epsilon hint {hint} disagrees with detected {detected}")]
    EpsilonMismatch { hint: f64, detected: f64 },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

impl InvariantError {
    /// Short machine-readable reason, used in status columns.
    pub fn reason(&self) -> &'static str {
        match self {
            InvariantError::System(SystemError::OutOfDomain { .. }) => "stencil-outside-domain",
            InvariantError::System(SystemError::Navigation { .. }) => "navigation",
            InvariantError::System(SystemError::SingularFrame { .. }) => "singular-frame",
            InvariantError::System(_) => "evaluation",
            InvariantError::Regularity { .. } => "regularity",
            InvariantError::ConvexityDegenerate { .. } => "convexity",
            InvariantError::CollinearCovector { .. } => "collinear-covector",
            InvariantError::EpsilonMismatch { .. } => "epsilon-mismatch",
            InvariantError::NonFinite(_) => "non-finite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantConfig {
    /// Threshold on |w1|, |w2| and |α|.
    pub regularity_tol: f64,
    /// Sup-norm below which a field counts as vanishing.
    pub verdict_threshold: f64,
    pub fd: FdConfig,
    /// Mutation hook for the self-test: reports `−b` instead of `b`.
    #[doc(hidden)]
    #[serde(skip)]
    pub flip_b: bool,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        InvariantConfig { regularity_tol: 1e-9, verdict_threshold: 1e-5, fd: FdConfig::default(), flip_b: false }
    }
}

impl InvariantConfig {
    pub fn with_fd(fd: FdConfig) -> Self {
        InvariantConfig { fd, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberData {
    pub epsilon: f64,
    pub lambda: Vec2,
    pub alpha: f64,
    pub beta: f64,
    pub theta_rate: f64,
    pub theta_rate_du: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSample {
    pub c: f64,
    pub c_theta: f64,
    pub b: f64,
    pub kappa: f64,
    #[serde(rename = "Lhb")]
    pub lhb: f64,
    #[serde(rename = "L2hb")]
    pub l2hb: f64,
    #[serde(rename = "Lvk")]
    pub lvk: f64,
    #[serde(rename = "Lvhb")]
    pub lvhb: f64,
    pub res_bnk: f64,
    pub res_lemma: f64,
    pub res_bracket: f64,
}

impl InvariantSample {
    fn values(&self) -> [f64; 11] {
        [
            self.c, self.c_theta, self.b, self.kappa, self.lhb, self.l2hb, self.lvk, self.lvhb, self.res_bnk,
            self.res_lemma, self.res_bracket,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// The three quantities the trivializability verdicts need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSample {
    pub kappa: f64,
    pub lhb: f64,
    pub lvhb: f64,
}

type R<T> = Result<T, InvariantError>;

/// Evaluation context: a system plus configuration.
#[derive(Clone, Copy)]
pub(crate) struct Ctx<'a> {
    pub sys: &'a ControlSystem2D,
    pub cfg: &'a InvariantConfig,
}

impl<'a> Ctx<'a> {
    pub fn new(sys: &'a ControlSystem2D, cfg: &'a InvariantConfig) -> Self {
        Ctx { sys, cfg }
    }

    fn fd(&self) -> FdConfig {
        self.cfg.fd
    }

    pub fn point(&self, q: Vec2, u: f64) -> R<Point> {
        fiber::solve_point(self.sys, q, u, self.cfg, true).map(|s| s.point)
    }

    /// Fibre data without the structure coefficient.
    fn fiber_point(&self, q: Vec2, u: f64) -> R<Point> {
        fiber::solve_point(self.sys, q, u, self.cfg, false).map(|s| s.point)
    }

    /// Derivative of `g` along the (q, u)-direction `dir`.
    pub fn along(&self, q: Vec2, u: f64, dir: [f64; 3], g: impl Fn(Vec2, f64) -> R<f64>) -> R<f64> {
        fd::derivative(self.fd(), |t| g([q[0] + t * dir[0], q[1] + t * dir[1]], u + t * dir[2]))
    }

    fn d_u(&self, q: Vec2, u: f64, g: impl Fn(Vec2, f64) -> R<f64>) -> R<f64> {
        self.along(q, u, [0.0, 0.0, 1.0], g)
    }

    fn r(&self, q: Vec2, u: f64) -> R<f64> {
        self.fiber_point(q, u).map(|p| p.r)
    }

    fn c(&self, q: Vec2, u: f64) -> R<f64> {
        self.point(q, u).map(|p| p.c)
    }

    fn r_u(&self, q: Vec2, u: f64) -> R<f64> {
        self.d_u(q, u, |q, u| self.r(q, u))
    }

    pub fn b_at(&self, q: Vec2, u: f64, p: &Point) -> R<f64> {
        let b = p.beta / p.r - self.r_u(q, u)? / (p.r * p.r);
        Ok(if self.cfg.flip_b { -b } else { b })
    }

    pub fn b(&self, q: Vec2, u: f64) -> R<f64> {
        let p = self.fiber_point(q, u)?;
        self.b_at(q, u, &p)
    }

    /// `(L_f θ′)/θ′` at fixed u.
    fn lf_log_r(&self, q: Vec2, u: f64, p: &Point) -> R<f64> {
        Ok(self.along(q, u, [p.f[0], p.f[1], 0.0], |q, u| self.r(q, u))? / p.r)
    }

    /// `(L_{f′} θ′)/θ′` at fixed u.
    fn lfp_log_r(&self, q: Vec2, u: f64, p: &Point) -> R<f64> {
        let fp = p.f_prime();
        Ok(self.along(q, u, [fp[0], fp[1], 0.0], |q, u| self.r(q, u))? / p.r)
    }

    /// `(c₁, d)`: gauge θ-derivative of c and the f′-coefficient of `[f, f′]`.
    pub fn c1_d_at(&self, q: Vec2, u: f64, p: &Point) -> R<(f64, f64)> {
        let lf = self.lf_log_r(q, u, p)?;
        let c_theta = self.d_u(q, u, |q, u| self.c(q, u))? / p.r;
        Ok((c_theta - lf, p.s - lf))
    }

    pub fn c1(&self, q: Vec2, u: f64) -> R<f64> {
        let p = self.point(q, u)?;
        self.c1_d_at(q, u, &p).map(|x| x.0)
    }

    /// κ together with the intermediate `(c₁, ∂_θ c₁, (L_{f′}θ′)/θ′)`.
    fn kappa_parts(&self, q: Vec2, u: f64, p: &Point) -> R<(f64, f64, f64, f64)> {
        let (c1, _) = self.c1_d_at(q, u, p)?;
        let fp = p.f_prime();
        let lfp_c = self.along(q, u, [fp[0], fp[1], 0.0], |q, u| self.c(q, u))?;
        let lf_c1 = self.along(q, u, [p.f[0], p.f[1], 0.0], |q, u| self.c1(q, u))?;
        let c1_theta = self.d_u(q, u, |q, u| self.c1(q, u))? / p.r;
        let lfp_r = self.lfp_log_r(q, u, p)?;
        let kappa = lfp_c - c1 * c1 - lf_c1 + p.c * c1_theta - p.c * lfp_r;
        Ok((kappa, c1, c1_theta, lfp_r))
    }

    pub fn kappa_at(&self, q: Vec2, u: f64, p: &Point) -> R<f64> {
        self.kappa_parts(q, u, p).map(|x| x.0)
    }

    pub fn kappa(&self, q: Vec2, u: f64) -> R<f64> {
        let p = self.point(q, u)?;
        self.kappa_at(q, u, &p)
    }

    fn h_dir(p: &Point) -> [f64; 3] {
        [p.f[0], p.f[1], p.mu()]
    }

    fn hp_dir(p: &Point, c1: f64) -> [f64; 3] {
        let fp = p.f_prime();
        [fp[0], fp[1], -c1 / p.r]
    }

    /// `L_h g` at `(q, u)`.
    pub fn lie_h(&self, q: Vec2, u: f64, p: &Point, g: impl Fn(Vec2, f64) -> R<f64>) -> R<f64> {
        self.along(q, u, Self::h_dir(p), g)
    }

    pub fn lhb(&self, q: Vec2, u: f64) -> R<f64> {
        let p = self.point(q, u)?;
        self.lie_h(q, u, &p, |q, u| self.b(q, u))
    }
}

fn finite(v: f64, what: &'static str) -> R<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(InvariantError::NonFinite(what))
    }
}

/// Raw regularity wedges `w1 = f ∧ ∂_u f`, `w2 = ∂_u f ∧ ∂²_u f`.
pub fn check_regularity(sys: &ControlSystem2D, q: Vec2, u: f64) -> Result<(f64, f64), SystemError> {
    Ok(fiber::wedges(&sys.velocity_jet(q, u)?))
}

/// λ with `⟨λ, f⟩ = ε`, `⟨λ, ∂_u f⟩ = 0`; ε is detected from the fibre.
pub fn adjoint_covector(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<Vec2> {
    Ctx::new(sys, cfg).fiber_point(q, u).map(|p| p.lambda)
}

pub fn fiber_data(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<FiberData> {
    let ctx = Ctx::new(sys, cfg);
    let p = ctx.fiber_point(q, u)?;
    let theta_rate_du = ctx.r_u(q, u)?;
    let b = p.beta / p.r - theta_rate_du / (p.r * p.r);
    Ok(FiberData {
        epsilon: p.eps,
        lambda: p.lambda,
        alpha: p.alpha,
        beta: p.beta,
        theta_rate: p.r,
        theta_rate_du,
        b: finite(if cfg.flip_b { -b } else { b }, "b")?,
    })
}

/// `[f, ∂_u f]` at fixed u, from exact q-jets.
pub fn control_bracket(sys: &ControlSystem2D, q: Vec2, u: f64) -> Result<Vec2, SystemError> {
    Ok(fiber::lie_bracket_u(&sys.velocity_jet(q, u)?))
}

/// `(c, d)` from `[f, f′] = −ε·c·f + d·f′`; `d` should equal `−(c′ + b·c)`.
pub fn structure_c(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<(f64, f64)> {
    let ctx = Ctx::new(sys, cfg);
    let p = ctx.point(q, u)?;
    let (_, d) = ctx.c1_d_at(q, u, &p)?;
    Ok((p.c, d))
}

/// Control curvature κ by the coordinate formula.
pub fn curvature_kappa(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<f64> {
    finite(Ctx::new(sys, cfg).kappa(q, u)?, "kappa")
}

/// Control curvature κ from the double bracket `[h, [v, h]] = κ·v`.
pub fn bracket_oracle_kappa(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<BracketOracle> {
    bracket::oracle(sys, q, u, cfg)
}

/// The fields needed for the trivializability verdicts: κ, `L_h b`, `L_{[v,h]} b`.
pub fn check_sample(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<CheckSample> {
    let ctx = Ctx::new(sys, cfg);
    let p = ctx.point(q, u)?;
    let (kappa, c1, _, _) = ctx.kappa_parts(q, u, &p)?;
    let lhb = ctx.lie_h(q, u, &p, |q, u| ctx.b(q, u))?;
    let lvhb = ctx.along(q, u, Ctx::hp_dir(&p, c1), |q, u| ctx.b(q, u))?;
    Ok(CheckSample { kappa: finite(kappa, "kappa")?, lhb: finite(lhb, "Lhb")?, lvhb: finite(lvhb, "Lvhb")? })
}

/// Every invariant and identity residual at one sample.
pub fn derived_invariants(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<InvariantSample> {
    let ctx = Ctx::new(sys, cfg);
    let p = ctx.point(q, u)?;
    let b = ctx.b_at(q, u, &p)?;
    let (kappa, c1, c1_theta, lfp_r) = ctx.kappa_parts(q, u, &p)?;
    let lhb = ctx.lie_h(q, u, &p, |q, u| ctx.b(q, u))?;
    let l2hb = ctx.lie_h(q, u, &p, |q, u| ctx.lhb(q, u))?;
    let lvk = ctx.d_u(q, u, |q, u| ctx.kappa(q, u))? / p.r;
    let lvhb = ctx.along(q, u, Ctx::hp_dir(&p, c1), |q, u| ctx.b(q, u))?;
    let c2 = c1_theta - lfp_r;
    let oracle = bracket::oracle(sys, q, u, cfg)?;
    let sample = InvariantSample {
        c: p.c,
        c_theta: c1,
        b,
        kappa,
        lhb,
        l2hb,
        lvk,
        lvhb,
        res_bnk: lvk + b * kappa + l2hb,
        res_lemma: c2 + b * c1 + p.eps * p.c - lhb,
        res_bracket: oracle.kappa - kappa,
    };
    if sample.is_finite() {
        Ok(sample)
    } else {
        Err(InvariantError::NonFinite("invariant sample"))
    }
}

/// `L_h g` for a scalar field `g(q, u)`, with `h` the Hamiltonian field of `sys`.
pub fn lie_derivative_h(
    sys: &ControlSystem2D,
    q: Vec2,
    u: f64,
    cfg: &InvariantConfig,
    g: impl Fn(Vec2, f64) -> R<f64>,
) -> R<f64> {
    let ctx = Ctx::new(sys, cfg);
    let p = ctx.point(q, u)?;
    ctx.lie_h(q, u, &p, g)
}

/// Hamiltonian field `h = (f, u̇)` at `(q, u)` in `(q1, q2, u)` components.
pub fn hamiltonian_field(sys: &ControlSystem2D, q: Vec2, u: f64, cfg: &InvariantConfig) -> R<[f64; 3]> {
    let p = Ctx::new(sys, cfg).point(q, u)?;
    Ok(Ctx::h_dir(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::systems::{ControlDomain, FramePair, ZermeloData};
    use std::f64::consts::PI;

    fn flat() -> ControlSystem2D {
        ControlSystem2D::riemannian(FramePair::euclidean())
    }

    #[test]
    fn regularity_wedges() {
        for k in 0..8 {
            let u = k as f64 * 0.7;
            let (w1, w2) = check_regularity(&flat(), [0.1, 0.2], u).unwrap();
            assert!((w1 - 1.0).abs() < 1e-15 && (w2 - 1.0).abs() < 1e-15);
        }
        let z = ControlSystem2D::zermelo(ZermeloData::new(FramePair::euclidean(), Expression::constant(0.4), Expression::constant(0.0)));
        let (w1, _) = check_regularity(&z, [0.0, 0.0], 0.9).unwrap();
        assert!((w1 - (1.0 + 0.4 * 0.9f64.cos())).abs() < 1e-15);
        let bad = ControlSystem2D::parse_general("cos(u)", "0", ControlDomain::Circle).unwrap();
        assert_eq!(check_regularity(&bad, [0.0, 0.0], 0.3).unwrap().1, 0.0);
        let cfg = InvariantConfig::default();
        assert!(matches!(fiber_data(&bad, [0.0, 0.0], 0.3, &cfg), Err(InvariantError::Regularity { .. })));
    }

    #[test]
    fn covectors() {
        let cfg = InvariantConfig::default();
        let l = adjoint_covector(&flat(), [0.0, 0.0], 0.0, &cfg).unwrap();
        assert_eq!(l, [1.0, 0.0]);
        let u = 2.2;
        let l = adjoint_covector(&flat(), [0.0, 0.0], u, &cfg).unwrap();
        assert!((l[0] - u.cos()).abs() < 1e-15 && (l[1] - u.sin()).abs() < 1e-15);
        let z = ControlSystem2D::zermelo(ZermeloData::new(FramePair::euclidean(), Expression::constant(0.5), Expression::constant(0.0)));
        let l = adjoint_covector(&z, [0.0, 0.0], 0.0, &cfg).unwrap();
        assert!((l[0] - 1.0 / 1.5).abs() < 1e-15 && l[1].abs() < 1e-15);
    }

    #[test]
    fn flat_fiber_data() {
        let d = fiber_data(&flat(), [0.3, 0.3], 1.0, &InvariantConfig::default()).unwrap();
        assert_eq!((d.epsilon, d.theta_rate), (1.0, 1.0));
        assert!((d.alpha + 1.0).abs() < 1e-15 && d.beta.abs() < 1e-15 && d.b.abs() < 1e-12);
    }

    #[test]
    fn flat_everything_vanishes() {
        let s = derived_invariants(&flat(), [0.2, -0.7], 0.4, &InvariantConfig::default()).unwrap();
        for v in s.values() {
            assert!(v.abs() < 1e-7, "{s:?}");
        }
    }

    #[test]
    fn ellipse_theta_rate_and_epsilon() {
        let sys = ControlSystem2D::parse_general("2*cos(u)", "sin(u)", ControlDomain::Circle).unwrap();
        let d = fiber_data(&sys, [0.0, 0.0], 0.0, &InvariantConfig::default()).unwrap();
        assert_eq!(d.epsilon, 1.0);
        // centro-affine arc length of an ellipse is u itself
        assert!((d.theta_rate - 1.0).abs() < 1e-14 && d.b.abs() < 1e-10);
        let reversed = ControlSystem2D::parse_general("2*cos(u)", "-sin(u)", ControlDomain::Circle).unwrap();
        assert_eq!(fiber_data(&reversed, [0.0, 0.0], PI / 3.0, &InvariantConfig::default()).unwrap().epsilon, 1.0);
    }

    #[test]
    fn epsilon_hint_is_cross_checked() {
        let cfg = InvariantConfig::default();
        assert!(fiber_data(&flat().with_epsilon_hint(1.0), [0.0, 0.0], 0.0, &cfg).is_ok());
        assert!(matches!(
            fiber_data(&flat().with_epsilon_hint(-1.0), [0.0, 0.0], 0.0, &cfg),
            Err(InvariantError::EpsilonMismatch { .. })
        ));
    }

    #[test]
    fn interval_stencil_leaving_the_domain_is_reported() {
        let sys = ControlSystem2D::parse_general("cos(u)", "sin(u)", ControlDomain::Interval { lo: 0.0, hi: 1.0 }).unwrap();
        let cfg = InvariantConfig::default();
        assert!(curvature_kappa(&sys, [0.0, 0.0], 0.5, &cfg).is_ok());
        let err = curvature_kappa(&sys, [0.0, 0.0], 0.0005, &cfg).unwrap_err();
        assert_eq!(err.reason(), "stencil-outside-domain");
    }
}
