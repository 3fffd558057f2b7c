//! Exact pointwise fibre quantities from the velocity jets.

use crate::expr::Jet;
use crate::linalg::{self, Mat2, Vec2};
use crate::systems::{lie_bracket, ControlSystem2D};

use super::{InvariantConfig, InvariantError};

/// Everything at one `(q, u)` that needs no finite differences.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    pub f: Vec2,
    pub fu: Vec2,
    pub eps: f64,
    pub lambda: Vec2,
    pub alpha: f64,
    pub beta: f64,
    /// θ′ = sqrt|α|.
    pub r: f64,
    /// f_u-coefficient of `[f, f_u] = p·f + s·f_u`; NaN when q-jets were skipped.
    pub s: f64,
    /// Structure coefficient at fixed u: `−ε·p/r`.
    pub c: f64,
}

impl Point {
    /// Fibre rate of the Hamiltonian field, `u̇ = −c/θ′`.
    pub fn mu(&self) -> f64 {
        -self.c / self.r
    }

    /// `f′ = f_u / θ′`.
    pub fn f_prime(&self) -> Vec2 {
        linalg::scale(1.0 / self.r, self.fu)
    }
}

fn rows(a: [f64; 2], b: [f64; 2]) -> Mat2 {
    [a, b]
}

fn col(j: &[Jet; 2], pick: impl Fn(&Jet) -> f64) -> Vec2 {
    [pick(&j[0]), pick(&j[1])]
}

pub(crate) fn wedges(j: &[Jet; 2]) -> (f64, f64) {
    let f = col(j, |x| x.value);
    let fu = col(j, |x| x.du);
    let fuu = col(j, |x| x.duu);
    (linalg::det(f, fu), linalg::det(fu, fuu))
}

pub(crate) struct Solved {
    pub point: Point,
    pub jets: [Jet; 2],
    pub a: Mat2,
}

pub(crate) fn solve_point(
    sys: &ControlSystem2D,
    q: Vec2,
    u: f64,
    cfg: &InvariantConfig,
    with_q: bool,
) -> Result<Solved, InvariantError> {
    let jets = if with_q { sys.velocity_jet(q, u)? } else { sys.velocity_u_jet(q, u)? };
    let (w1, w2) = wedges(&jets);
    let tol = cfg.regularity_tol;
    if !(w1.abs() > tol && w2.abs() > tol) {
        return Err(InvariantError::Regularity { q1: q[0], q2: q[1], u, w1, w2 });
    }
    let f = col(&jets, |x| x.value);
    let fu = col(&jets, |x| x.du);
    let fuu = col(&jets, |x| x.duu);
    let fuuu = col(&jets, |x| x.duuu);

    let a = rows(f, fu);
    let a1 = rows(fu, fuu);
    let a2 = rows(fuu, fuuu);
    let singular = || InvariantError::Regularity { q1: q[0], q2: q[1], u, w1, w2 };
    let lam1 = linalg::solve(a, [1.0, 0.0], 0.0).ok_or_else(singular)?;
    let lam1_u = linalg::solve(a, linalg::scale(-1.0, linalg::mat_vec(a1, lam1)), 0.0).ok_or_else(singular)?;
    let rhs = linalg::add(linalg::mat_vec(a2, lam1), linalg::scale(2.0, linalg::mat_vec(a1, lam1_u)));
    let lam1_uu = linalg::solve(a, linalg::scale(-1.0, rhs), 0.0).ok_or_else(singular)?;

    let (alpha, beta) =
        linalg::expand(lam1_uu, lam1, lam1_u, 0.0).ok_or(InvariantError::CollinearCovector { q1: q[0], q2: q[1], u })?;
    if !(alpha.abs() > tol) {
        return Err(InvariantError::ConvexityDegenerate { q1: q[0], q2: q[1], u, alpha });
    }
    let eps = -alpha.signum();
    if let Some(hint) = sys.epsilon_hint() {
        if hint != eps {
            return Err(InvariantError::EpsilonMismatch { hint, detected: eps });
        }
    }
    let r = alpha.abs().sqrt();

    let (p, s) = if with_q {
        linalg::expand(lie_bracket_u(&jets), f, fu, 0.0).ok_or_else(singular)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let point = Point {
        f,
        fu,
        eps,
        lambda: linalg::scale(eps, lam1),
        alpha,
        beta,
        r,
        s,
        c: -eps * p / r,
    };
    Ok(Solved { point, jets, a })
}

/// `[f, f_u]` at fixed u from the q-jets.
pub(crate) fn lie_bracket_u(j: &[Jet; 2]) -> Vec2 {
    let f = [j[0], j[1]];
    let fu = [
        Jet { value: j[0].du, dq1: j[0].dq1_du, dq2: j[0].dq2_du, ..Default::default() },
        Jet { value: j[1].du, dq1: j[1].dq1_du, dq2: j[1].dq2_du, ..Default::default() },
    ];
    lie_bracket(&f, &fu)
}

/// Fibre rate of the extremal flow from the costate equation
/// `λ̇ = −(∂f/∂q)ᵀλ`, using q-derivatives of λ from the defining linear system.
/// Independent of the bracket expansion behind `Point::c`.
pub(crate) fn mu_from_costate(s: &Solved) -> Result<f64, InvariantError> {
    let p = &s.point;
    let j = &s.jets;
    let df = [j[0].dq(), j[1].dq()];
    let mut dlam_f = [0.0; 2];
    for (k, fk) in p.f.iter().enumerate() {
        let pick = |x: &Jet| if k == 0 { (x.dq1, x.dq1_du) } else { (x.dq2, x.dq2_du) };
        let (d0, du0) = pick(&j[0]);
        let (d1, du1) = pick(&j[1]);
        let aq = rows([d0, d1], [du0, du1]);
        let lam_q = linalg::solve(s.a, linalg::scale(-1.0, linalg::mat_vec(aq, p.lambda)), 0.0)
            .ok_or(InvariantError::CollinearCovector { q1: f64::NAN, q2: f64::NAN, u: f64::NAN })?;
        dlam_f = linalg::add(dlam_f, linalg::scale(*fk, lam_q));
    }
    let drift = linalg::dot(p.lambda, linalg::mat_vec(df, p.fu)) + linalg::dot(dlam_f, p.fu);
    Ok(-drift / (p.r * p.r))
}
