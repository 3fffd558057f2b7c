//! Explicit Runge–Kutta integrators.
//!
//! [`rk4`] is a fixed-step scheme generic over [`Scalar`], so the same code
//! integrates dual-number states and yields exact derivatives of the
//! discrete map. [`Dopri5`] is the Dormand–Prince 5(4) embedded pair with
//! step-size control on `f64` states.

use serde::{Deserialize, Serialize};

use crate::expr::Scalar;

fn axpy<T: Scalar, const N: usize>(y: &[T; N], h: f64, k: &[T; N]) -> [T; N] {
    let mut out = *y;
    let h = T::from_f64(h);
    for i in 0..N {
        out[i] = y[i] + h * k[i];
    }
    out
}

/// Classical RK4 with `steps` equal steps from `t0` to `t1` (either direction).
pub fn rk4<T: Scalar, const N: usize, E>(
    mut rhs: impl FnMut(f64, &[T; N]) -> Result<[T; N], E>,
    t0: f64,
    t1: f64,
    y0: [T; N],
    steps: usize,
) -> Result<[T; N], E> {
    let steps = steps.max(1);
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let sixth = T::from_f64(1.0 / 6.0);
    let two = T::from_f64(2.0);
    let hh = T::from_f64(h);
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k1))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &k2))?;
        let k4 = rhs(t + h, &axpy(&y, h, &k3))?;
        for i in 0..N {
            y[i] = y[i] + hh * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dopri5 {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { atol: 1e-9, rtol: 1e-9, max_step: 0.05, min_step: 1e-12, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest normalised error estimate among accepted steps.
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stop<E> {
    Completed,
    Rhs { t: f64, error: E },
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize, E> {
    /// Accepted states, starting with the initial one.
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub stats: StepStats,
    pub stop: Stop<E>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Dopri5 {
    /// Integrate from `t0` to `t1 > t0`. Every accepted step is recorded, and
    /// steps are shortened to land exactly on each of `checkpoints`.
    pub fn integrate<const N: usize, E2>(
        &self,
        mut rhs: impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E2>,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        checkpoints: &[f64],
    ) -> Solution<N, E2> {
        let mut sol = Solution { t: vec![t0], y: vec![y0], stats: StepStats::default(), stop: Stop::Completed };
        let mut marks: Vec<f64> = checkpoints.iter().copied().filter(|&c| c > t0 && c < t1).collect();
        marks.sort_by(f64::total_cmp);
        marks.dedup();
        marks.push(t1);
        // a checkpoint closer than this counts as reached
        let snap = |mark: f64| 1e-12 * mark.abs().max(1.0);
        let mut next_mark = 0;

        let mut t = t0;
        let mut y = y0;
        let mut k1 = match rhs(t, &y) {
            Ok(k) => k,
            Err(error) => {
                sol.stop = Stop::Rhs { t, error };
                return sol;
            }
        };
        let mut h = self.max_step.min(t1 - t0);
        while t < t1 {
            if sol.stats.steps + sol.stats.rejected >= self.max_steps {
                sol.stop = Stop::TooManySteps { t };
                return sol;
            }
            let target = marks[next_mark];
            if target - t <= snap(target) {
                // already there up to rounding: relabel the last sample
                t = target;
                *sol.t.last_mut().expect("initial sample") = t;
                next_mark += 1;
                continue;
            }
            let clipped = h >= target - t - snap(target);
            let step = if clipped { target - t } else { h };

            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            let mut failed = None;
            for s in 1..7 {
                let mut ys = y;
                for i in 0..N {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    ys[i] = y[i] + step * acc;
                }
                match rhs(t + C[s] * step, &ys) {
                    Ok(v) => k[s] = v,
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            if let Some(error) = failed {
                // shrink into the region where the field is defined
                h = 0.25 * step;
                sol.stats.rejected += 1;
                if h < self.min_step {
                    sol.stop = Stop::Rhs { t, error };
                    return sol;
                }
                continue;
            }
            let mut y_new = y;
            for i in 0..N {
                let mut acc = 0.0;
                for s in 0..6 {
                    acc += A[6][s] * k[s][i];
                }
                y_new[i] = y[i] + step * acc;
            }
            let mut err = 0.0f64;
            for i in 0..N {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * k[s][i];
                }
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((step * e / scale).abs());
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = k[6];
                sol.stats.steps += 1;
                sol.stats.max_error_estimate = sol.stats.max_error_estimate.max(err);
                sol.t.push(t);
                sol.y.push(y);
                if clipped {
                    next_mark += 1;
                }
                // a clipped step says nothing against the proposal it replaced
                h = if clipped { h.max(step * factor) } else { step * factor }.min(self.max_step);
            } else {
                sol.stats.rejected += 1;
                h = step * factor;
                if h < self.min_step {
                    sol.stop = Stop::StepUnderflow { t };
                    return sol;
                }
            }
        }
        sol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Dual;
    use std::convert::Infallible;

    #[test]
    fn rk4_exponential_and_its_derivative() {
        // y' = y with y(0) = x; the dual part carries dy/dx = e^t
        let y0 = [Dual::new(1.0, 1.0)];
        let y = rk4(|_, y: &[Dual<f64>; 1]| Ok::<_, Infallible>(*y), 0.0, 1.0, y0, 200).unwrap();
        let e = 1f64.exp();
        assert!((y[0].re - e).abs() < 1e-10 && (y[0].eps - e).abs() < 1e-10);
        let back = rk4(|_, y: &[f64; 1]| Ok::<_, Infallible>(*y), 1.0, 0.0, [e], 200).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dopri_harmonic_oscillator() {
        let d = Dopri5::default();
        let sol = d.integrate(|_, y: &[f64; 2]| Ok::<_, Infallible>([y[1], -y[0]]), 0.0, 10.0, [1.0, 0.0], &[2.5]);
        assert_eq!(sol.stop, Stop::Completed);
        let y = sol.y.last().unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-7 && (y[1] + 10f64.sin()).abs() < 1e-7);
        assert!(sol.t.contains(&2.5));
        assert!(sol.t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*sol.t.last().unwrap(), 10.0);
        assert!(sol.stats.max_error_estimate <= 1.0);
    }

    #[test]
    fn dopri_reports_failures_of_the_field() {
        let d = Dopri5::default();
        let sol = d.integrate(
            |t, y: &[f64; 1]| if t > 0.5 { Err("gone") } else { Ok([y[0]]) },
            0.0,
            1.0,
            [1.0],
            &[],
        );
        match sol.stop {
            Stop::Rhs { t, error } => {
                assert_eq!(error, "gone");
                assert!(t <= 0.5 && t > 0.49);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn checkpoints_reached_by_rounding_do_not_stall() {
        let dopri = Dopri5::default();
        let marks: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        let sol = dopri.integrate(|_, _: &[f64; 1]| Ok::<_, Infallible>([1.0]), 0.0, 1.0, [0.0], &marks);
        assert!(matches!(sol.stop, Stop::Completed));
        assert!(sol.stats.steps <= 21, "{:?}", sol.stats);
        for m in marks {
            assert!(sol.t.contains(&m), "missing {m}");
        }
        assert!(sol.t.windows(2).all(|w| w[1] > w[0]));
    }
}
