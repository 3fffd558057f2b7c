//! Central finite differences with Richardson extrapolation.
//!
//! Used for derivatives of derived scalar fields (θ′, c, b, κ) whose exact
//! differentiation would go through linear solves.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Base step h.
    pub step: f64,
    /// Richardson levels on top of the plain central difference at h.
    pub richardson: u32,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-3, richardson: 1 }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        FdConfig { step, ..Default::default() }
    }

    /// Largest offset the stencil reaches from the centre, per unit direction.
    pub fn reach(&self) -> f64 {
        self.step
    }
}

/// Richardson table for an even error expansion in h.
fn extrapolate<E>(cfg: FdConfig, mut at_step: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    let levels = cfg.richardson as usize;
    let mut row: Vec<f64> = Vec::with_capacity(levels + 1);
    let mut h = cfg.step;
    for _ in 0..=levels {
        row.push(at_step(h)?);
        h *= 0.5;
    }
    // row[k] is the estimate at step h/2^k
    let mut factor = 4.0;
    for level in 1..=levels {
        for k in (level..=levels).rev() {
            row[k] = (factor * row[k] - row[k - 1]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    Ok(row[levels])
}

/// d/dt g(t) at t = 0.
pub fn derivative<E>(cfg: FdConfig, mut g: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    extrapolate(cfg, |h| Ok((g(h)? - g(-h)?) / (2.0 * h)))
}

/// d²/dt² g(t) at t = 0; `g0` is g(0), computed once by the caller.
pub fn second_derivative<E>(cfg: FdConfig, g0: f64, mut g: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    extrapolate(cfg, |h| Ok((g(h)? - 2.0 * g0 + g(-h)?) / (h * h)))
}

/// Derivative of a vector-valued function, component-wise on the same stencil.
pub fn derivative_vec<const N: usize, E>(
    cfg: FdConfig,
    mut g: impl FnMut(f64) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let levels = cfg.richardson as usize;
    let mut rows: Vec<[f64; N]> = Vec::with_capacity(levels + 1);
    let mut h = cfg.step;
    for _ in 0..=levels {
        let (p, m) = (g(h)?, g(-h)?);
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (p[i] - m[i]) / (2.0 * h);
        }
        rows.push(d);
        h *= 0.5;
    }
    let mut factor = 4.0;
    for level in 1..=levels {
        for k in (level..=levels).rev() {
            for i in 0..N {
                rows[k][i] = (factor * rows[k][i] - rows[k - 1][i]) / (factor - 1.0);
            }
        }
        factor *= 4.0;
    }
    Ok(rows[levels])
}
