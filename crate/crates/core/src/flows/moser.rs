use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::{Dual, Expression, Jet, Scalar, Var};
use crate::linalg::{self, Mat2, Vec2};
use crate::ode;
use crate::systems::{ControlDomain, ControlSystem2D, SystemError, VelocityModel};

use super::FlowError;

/// The u-dependent field `X_u(q) = (a1(u) ± q2, a2(u, q2) − q1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoserFamily {
    a1: Expression,
    a2: Expression,
    sign: f64,
    u0: f64,
}

impl MoserFamily {
    pub fn new(a1: Expression, a2: Expression, sign: f64, u0: f64) -> Result<Self, FlowError> {
        let check = |name: &str, e: &Expression, allowed: &[Var]| {
            if let Some(v) = e.variables().into_iter().find(|v| !allowed.contains(v)) {
                return Err(FlowError::InvalidFamily(format!("{name} may not depend on {}", v.name())));
            }
            Ok(())
        };
        check("a1", &a1, &[Var::U])?;
        check("a2", &a2, &[Var::U, Var::Q2])?;
        if sign != 1.0 && sign != -1.0 {
            return Err(FlowError::InvalidFamily(format!("sign must be +1 or -1, got {sign}")));
        }
        if !u0.is_finite() {
            return Err(FlowError::InvalidFamily("u0 must be finite".into()));
        }
        Ok(MoserFamily { a1, a2, sign, u0 })
    }

    pub fn parse(a1: &str, a2: &str, sign: f64, u0: f64) -> Result<Self, FlowError> {
        Self::new(Expression::parse(a1)?, Expression::parse(a2)?, sign, u0)
    }

    pub fn a1(&self) -> &Expression {
        &self.a1
    }

    pub fn a2(&self) -> &Expression {
        &self.a2
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// True when `a2` does not depend on q2, the case with a state-independent generated system.
    pub fn is_q2_free(&self) -> bool {
        !self.a2.variables().contains(&Var::Q2)
    }

    /// `X_u(p)` with `g = ∂a2/∂q2` and `∂g/∂q2` at `(u, p2)`.
    fn field(&self, p: Vec2, u: f64) -> Result<(Vec2, f64, f64), SystemError> {
        type D2 = Dual<Dual<f64>>;
        let a1 = self.a1.eval(0.0, 0.0, u)?;
        let seed = D2::new(Dual::new(p[1], 1.0), Dual::new(1.0, 0.0));
        let a2 = self.a2.eval_generic(D2::from_f64(p[0]), seed, D2::from_f64(u))?;
        Ok(([a1 + self.sign * p[1], a2.re.re - p[0]], a2.re.eps, a2.eps.eps))
    }
}

pub fn moser_field(fam: &MoserFamily, q: Vec2, u: f64) -> Result<Vec2, FlowError> {
    Ok(fam.field(q, u)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    /// RK4 steps per transport, independent of its length, so the discrete map
    /// stays smooth in both endpoints.
    pub steps: usize,
    /// Abort when |q| or a Jacobian entry exceeds this.
    pub blowup: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { steps: 64, blowup: 1e6 }
    }
}

fn check_bound<const N: usize>(y: &[f64; N], u_from: f64, u_to: f64, cfg: &TransportConfig) -> Result<(), FlowError> {
    if y.iter().any(|v| !(v.abs() <= cfg.blowup)) {
        return Err(FlowError::BlowUp { u_from, u_to, bound: cfg.blowup });
    }
    Ok(())
}

/// `P_{u_to} ∘ P_{u_from}⁻¹` applied to `q0`, with its Jacobian.
pub fn moser_transport(
    fam: &MoserFamily,
    q0: Vec2,
    u_from: f64,
    u_to: f64,
    cfg: &TransportConfig,
) -> Result<(Vec2, Mat2), FlowError> {
    let s = fam.sign;
    let y = ode::rk4(
        |u, y: &[f64; 6]| {
            let (x, g, _) = fam.field([y[0], y[1]], u)?;
            // dJ/du = [[0, s], [−1, g]]·J, J row-major in y[2..6]
            Ok::<_, FlowError>([x[0], x[1], s * y[4], s * y[5], g * y[4] - y[2], g * y[5] - y[3]])
        },
        u_from,
        u_to,
        [q0[0], q0[1], 1.0, 0.0, 0.0, 1.0],
        cfg.steps,
    )?;
    check_bound(&y, u_from, u_to, cfg)?;
    Ok(([y[0], y[1]], [[y[2], y[3]], [y[4], y[5]]]))
}

/// Transport of `(p, J)` together with their q-derivatives
/// `(∂p/∂q_j, ∂J/∂q_j)`, j = 1, 2, in y[6..12] and y[12..18]. RK4 commutes
/// with linearisation, so the tangents are the exact derivatives of the
/// discrete map.
fn transport_with_tangents(
    fam: &MoserFamily,
    q0: Vec2,
    u_from: f64,
    u_to: f64,
    cfg: &TransportConfig,
) -> Result<[f64; 18], FlowError> {
    let s = fam.sign;
    let mut y0 = [0.0; 18];
    y0[..6].copy_from_slice(&[q0[0], q0[1], 1.0, 0.0, 0.0, 1.0]);
    y0[6] = 1.0;
    y0[13] = 1.0;
    let y = ode::rk4(
        |u, y: &[f64; 18]| {
            let (x, g, g_q2) = fam.field([y[0], y[1]], u)?;
            let mut d = [0.0; 18];
            d[..6].copy_from_slice(&[x[0], x[1], s * y[4], s * y[5], g * y[4] - y[2], g * y[5] - y[3]]);
            for k in [6, 12] {
                let (dp, dj) = (&y[k..k + 2], &y[k + 2..k + 6]);
                // DX·dp, and ∂(DX·J)/∂q_j = DX·dJ + [[0, 0], [0, g_q2·dp2]]·J
                let dg = g_q2 * dp[1];
                d[k] = s * dp[1];
                d[k + 1] = g * dp[1] - dp[0];
                d[k + 2] = s * dj[2];
                d[k + 3] = s * dj[3];
                d[k + 4] = g * dj[2] - dj[0] + dg * y[4];
                d[k + 5] = g * dj[3] - dj[1] + dg * y[5];
            }
            Ok::<_, FlowError>(d)
        },
        u_from,
        u_to,
        y0,
        cfg.steps,
    )?;
    check_bound(&y, u_from, u_to, cfg)?;
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub transport: TransportConfig,
    /// Control interval `[u0 − span, u0 + span]` of transport-backed systems.
    pub span: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { transport: TransportConfig::default(), span: std::f64::consts::PI }
    }
}

/// `f(q, u) = J⁻¹·e1` with `J` the Jacobian of `P_u` at q, evaluated by fresh
/// transport on every query.
#[derive(Debug)]
pub struct TransportedVelocity {
    fam: MoserFamily,
    cfg: TransportConfig,
}

impl TransportedVelocity {
    pub fn new(fam: MoserFamily, cfg: TransportConfig) -> Self {
        TransportedVelocity { fam, cfg }
    }

    fn jets(&self, q: Vec2, u: f64, with_q: bool) -> Result<[Jet; 2], FlowError> {
        let fam = &self.fam;
        let s = fam.sign;
        let mut jets = [Jet::default(); 2];
        let (p, jm) = if with_q {
            let y = transport_with_tangents(fam, q, fam.u0, u, &self.cfg)?;
            let jm = [[y[2], y[3]], [y[4], y[5]]];
            let f = linalg::solve(jm, [1.0, 0.0], 0.0).ok_or(FlowError::SingularJacobian { u })?;
            let fu = linalg::solve(jm, [0.0, 1.0], 0.0).ok_or(FlowError::SingularJacobian { u })?;
            for k in 0..2 {
                let o = 6 * (k + 1) + 2;
                let dj = [[y[o], y[o + 1]], [y[o + 2], y[o + 3]]];
                // ∂(J⁻¹v)/∂q_j = −J⁻¹·∂J/∂q_j·J⁻¹v
                let df = linalg::solve(jm, linalg::scale(-1.0, linalg::mat_vec(dj, f)), 0.0)
                    .ok_or(FlowError::SingularJacobian { u })?;
                let dfu = linalg::solve(jm, linalg::scale(-1.0, linalg::mat_vec(dj, fu)), 0.0)
                    .ok_or(FlowError::SingularJacobian { u })?;
                for i in 0..2 {
                    if k == 0 {
                        jets[i].dq1 = df[i];
                        jets[i].dq1_du = dfu[i];
                    } else {
                        jets[i].dq2 = df[i];
                        jets[i].dq2_du = dfu[i];
                    }
                }
            }
            ([y[0], y[1]], jm)
        } else {
            moser_transport(fam, q, fam.u0, u, &self.cfg)?
        };
        let (x, g, g_q2, g_u) = self.a2_derivatives(p, u)?;
        let inv = |v: Vec2| linalg::solve(jm, v, 0.0).ok_or(FlowError::SingularJacobian { u });
        let f = inv([1.0, 0.0])?;
        let fu = inv([0.0, 1.0])?;
        let fuu = inv([-s, -g])?;
        let fuuu = inv([s * g, -g_q2 * x[1] - s + g * g - g_u])?;
        for i in 0..2 {
            jets[i].value = f[i];
            jets[i].du = fu[i];
            jets[i].duu = fuu[i];
            jets[i].duuu = fuuu[i];
        }
        Ok(jets)
    }

    /// `X_u(p)` with `g = ∂a2/∂q2`, `∂g/∂q2` and `∂g/∂u` at `(u, p2)`.
    fn a2_derivatives(&self, p: Vec2, u: f64) -> Result<(Vec2, f64, f64, f64), FlowError> {
        let a2 = &self.fam.a2;
        type D2 = Dual<Dual<f64>>;
        let qq = D2::new(Dual::new(p[1], 1.0), Dual::new(1.0, 0.0));
        let r = a2.eval_generic(D2::from_f64(p[0]), qq, D2::from_f64(u))?;
        let (g, g_q2) = (r.re.eps, r.eps.eps);
        let qu = D2::new(Dual::new(p[1], 0.0), Dual::new(1.0, 0.0));
        let uu = D2::new(Dual::new(u, 1.0), Dual::constant(0.0));
        let g_u = a2.eval_generic(D2::from_f64(p[0]), qu, uu)?.eps.eps;
        let x = moser_field(&self.fam, p, u)?;
        Ok((x, g, g_q2, g_u))
    }
}

fn into_system(e: FlowError) -> SystemError {
    match e {
        FlowError::System(s) => s,
        other => SystemError::Model(other.to_string()),
    }
}

impl VelocityModel for TransportedVelocity {
    fn velocity_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError> {
        self.jets(q, u, true).map_err(into_system)
    }

    fn velocity_u_jet(&self, q: Vec2, u: f64) -> Result<[Jet; 2], SystemError> {
        self.jets(q, u, false).map_err(into_system)
    }
}

/// The commuting-frame system generated by a Moser family.
///
/// When `a2` is free of q2 the transport is affine with a q-independent
/// Jacobian and the result is the closed form `(cos(u−u0), sin(u−u0))` for
/// sign +1 or `(cosh(u−u0), sinh(u−u0))` for sign −1. Otherwise the system is
/// backed by [`TransportedVelocity`] on `[u0 − span, u0 + span]`.
pub fn generate_commuting_system(fam: &MoserFamily, cfg: &GenerateConfig) -> ControlSystem2D {
    let du = Expression::u() - fam.u0;
    if fam.is_q2_free() {
        if fam.sign > 0.0 {
            ControlSystem2D::general([du.clone().cos(), du.sin()], ControlDomain::Circle).with_epsilon_hint(1.0)
        } else {
            let ep = du.clone().exp();
            let em = (-du).exp();
            let cosh = (ep.clone() + em.clone()) * 0.5;
            let sinh = (ep - em) * 0.5;
            let interval = ControlDomain::Interval { lo: fam.u0 - cfg.span, hi: fam.u0 + cfg.span };
            ControlSystem2D::general([cosh, sinh], interval).with_epsilon_hint(-1.0)
        }
    } else {
        transported_system(fam, cfg)
    }
}

/// The generated system backed by numerical transport, whatever the family.
pub fn transported_system(fam: &MoserFamily, cfg: &GenerateConfig) -> ControlSystem2D {
    let interval = ControlDomain::Interval { lo: fam.u0 - cfg.span, hi: fam.u0 + cfg.span };
    let model = TransportedVelocity::new(fam.clone(), cfg.transport);
    ControlSystem2D::from_model(Arc::new(model), interval).with_epsilon_hint(fam.sign)
}
