//! κ from `[h, [v, h]] = κ·v`, with every bracket taken by finite differences
//! of the field components on `(q1, q2, u)`.
//!
//! The fibre rate of `h` comes from the costate equation rather than from the
//! structure coefficient, so this path shares only the jets with the formula.

use serde::Serialize;

use crate::fd;
use crate::linalg::Vec2;
use crate::systems::ControlSystem2D;

use super::fiber::{mu_from_costate, solve_point};
use super::{InvariantConfig, InvariantError};

type V3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketOracle {
    pub kappa: f64,
    /// Norm of the q-components of `[h, [v, h]]`, which must vanish.
    pub q_residual: f64,
}

struct Fields<'a> {
    sys: &'a ControlSystem2D,
    cfg: &'a InvariantConfig,
}

fn shift(x: V3, t: f64, d: V3) -> V3 {
    [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl Fields<'_> {
    fn h(&self, x: V3) -> Result<V3, InvariantError> {
        let s = solve_point(self.sys, [x[0], x[1]], x[2], self.cfg, true)?;
        let mu = mu_from_costate(&s)?;
        Ok([s.point.f[0], s.point.f[1], mu])
    }

    fn v(&self, x: V3) -> Result<V3, InvariantError> {
        let s = solve_point(self.sys, [x[0], x[1]], x[2], self.cfg, false)?;
        Ok([0.0, 0.0, 1.0 / s.point.r])
    }

    /// `[X, Y](x) = d/dt Y(x + tX(x)) − d/dt X(x + tY(x))`.
    fn bracket(
        &self,
        x: V3,
        xf: &dyn Fn(V3) -> Result<V3, InvariantError>,
        yf: &dyn Fn(V3) -> Result<V3, InvariantError>,
    ) -> Result<V3, InvariantError> {
        let (xv, yv) = (xf(x)?, yf(x)?);
        let dy = fd::derivative_vec(self.cfg.fd, |t| yf(shift(x, t, xv)))?;
        let dx = fd::derivative_vec(self.cfg.fd, |t| xf(shift(x, t, yv)))?;
        Ok(sub(dy, dx))
    }
}

pub(super) fn oracle(
    sys: &ControlSystem2D,
    q: Vec2,
    u: f64,
    cfg: &InvariantConfig,
) -> Result<BracketOracle, InvariantError> {
    let fields = Fields { sys, cfg };
    let x = [q[0], q[1], u];
    let h = |y: V3| fields.h(y);
    let v = |y: V3| fields.v(y);
    let w = |y: V3| fields.bracket(y, &v, &h);
    let hw = fields.bracket(x, &h, &w)?;
    let r = solve_point(sys, q, u, cfg, false)?.point.r;
    Ok(BracketOracle { kappa: r * hw[2], q_residual: hw[0].hypot(hw[1]) })
}
