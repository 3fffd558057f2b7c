//! Geodesics of the round sphere from the extremal flow, with the Clairaut
//! integral `sin q1 · sin u` as a check.

use control_curvature::flows::{extremal_flow, FlowConfig};
use control_curvature::systems::{ControlSystem2D, FramePair};

fn main() {
    let sys = ControlSystem2D::riemannian(FramePair::round_sphere());
    let cfg = FlowConfig::default();
    for u0 in [0.3, 1.2, 2.0] {
        let tr = extremal_flow(&sys, [1.2, 0.0], u0, 2.0, &cfg).expect("regular start");
        let clairaut = |q: [f64; 2], u: f64| q[0].sin() * u.sin();
        let c0 = clairaut([1.2, 0.0], u0);
        let drift = tr.samples.iter().map(|s| (clairaut(s.q, s.u) - c0).abs()).fold(0.0, f64::max);
        let end = tr.last();
        println!(
            "u0 = {u0}: {:?} after {} steps, end q = ({:.6}, {:.6}) u = {:.6}, Clairaut drift {drift:.1e}",
            tr.status, tr.meta.steps, end.q[0], end.q[1], end.u
        );
    }
}
