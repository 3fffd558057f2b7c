//! Zero-drift Zermelo on the hyperbolic half-plane: the closed-form field must
//! reproduce the geodesics computed by the general engine.
//!
//! Geodesics of `q2·∂1, q2·∂2` are half-circles centred on the q1-axis, and
//! `cos u / q2`, `(q1 cos u + q2 sin u) / q2` are conserved along them.

use control_curvature::expr::Expression;
use control_curvature::flows::{extremal_flow_with_checkpoints, zermelo_closed_form_flow, ExtremalTrajectory, FlowConfig, FlowStatus};
use control_curvature::ode::Dopri5;
use control_curvature::systems::{ControlSystem2D, FramePair, ZermeloData};

const T_END: f64 = 1.5;

fn tight() -> FlowConfig {
    FlowConfig {
        integrator: Dopri5 { atol: 1e-12, rtol: 1e-12, ..Dopri5::default() },
        ..FlowConfig::default()
    }
}

fn checkpoints() -> Vec<f64> {
    (1..=15).map(|k| 0.1 * k as f64).collect()
}

fn at(tr: &ExtremalTrajectory, t: f64) -> [f64; 3] {
    let s = tr.samples.iter().find(|s| (s.t - t).abs() < 1e-12).expect("checkpoint sampled");
    [s.q[0], s.q[1], s.u]
}

fn starts() -> Vec<([f64; 2], f64)> {
    vec![([0.0, 1.0], 0.3), ([0.5, 1.5], -0.7), ([-0.4, 0.8], 2.0), ([0.2, 1.2], 1.2)]
}

fn closed_form(q0: [f64; 2], u0: f64) -> ExtremalTrajectory {
    let data = ZermeloData::new(FramePair::hyperbolic_half_plane(), Expression::constant(0.0), Expression::constant(0.0));
    zermelo_closed_form_flow(&data, q0, u0, T_END, &checkpoints(), &tight()).unwrap()
}

fn general(q0: [f64; 2], u0: f64) -> ExtremalTrajectory {
    let sys = ControlSystem2D::riemannian(FramePair::hyperbolic_half_plane());
    extremal_flow_with_checkpoints(&sys, q0, u0, T_END, &checkpoints(), &tight()).unwrap()
}

#[test]
fn closed_form_matches_general_engine() {
    for (q0, u0) in starts() {
        let (a, b) = (closed_form(q0, u0), general(q0, u0));
        assert_eq!(a.status, FlowStatus::Completed);
        assert_eq!(b.status, FlowStatus::Completed);
        for t in checkpoints() {
            let (x, y) = (at(&a, t), at(&b, t));
            let err = (0..3).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-7, "start {q0:?}, {u0}: t={t} closed {x:?} general {y:?}");
        }
    }
}

#[test]
fn trajectories_stay_on_the_geodesic_circle() {
    for (q0, u0) in starts() {
        let centre = q0[0] + q0[1] * u0.tan();
        let radius = q0[1] / u0.cos().abs();
        for tr in [closed_form(q0, u0), general(q0, u0)] {
            for s in &tr.samples {
                let r = (s.q[0] - centre).hypot(s.q[1]);
                assert!((r - radius).abs() < 1e-8 * radius.max(1.0), "start {q0:?}: r={r} expected {radius}");
            }
        }
    }
}

#[test]
fn first_integrals_are_conserved() {
    let i1 = |x: [f64; 3]| x[2].cos() / x[1];
    let i2 = |x: [f64; 3]| (x[0] * x[2].cos() + x[1] * x[2].sin()) / x[1];
    for (q0, u0) in starts() {
        let x0 = [q0[0], q0[1], u0];
        for tr in [closed_form(q0, u0), general(q0, u0)] {
            for t in checkpoints() {
                let x = at(&tr, t);
                assert!((i1(x) - i1(x0)).abs() < 1e-8, "cos u/q2 drifted at t={t}");
                assert!((i2(x) - i2(x0)).abs() < 1e-8, "second integral drifted at t={t}");
            }
        }
    }
}

#[test]
fn unit_speed_in_the_metric() {
    for (q0, u0) in starts() {
        let tr = general(q0, u0);
        let ts = checkpoints();
        for w in ts.windows(2) {
            let (x, y) = (at(&tr, w[0]), at(&tr, w[1]));
            // Hyperbolic length of a short chord, midpoint rule.
            let mid = 0.5 * (x[1] + y[1]);
            let len = (y[0] - x[0]).hypot(y[1] - x[1]) / mid;
            assert!((len - (w[1] - w[0])).abs() < 1e-3, "chord length {len}");
        }
    }
}
