//! Control curvature of a co-Zermelo problem three ways: the general
//! coordinate formula, the navigation closed form and `3/φ⁴`.

use control_curvature::invariants::{self, InvariantConfig};
use control_curvature::report::selftest;
use control_curvature::systems::{cozermelo_kappa_closed, SystemKind};

fn main() {
    let sys = selftest::cozermelo_example();
    let SystemKind::CoZermelo(data) = sys.kind() else { unreachable!() };
    let cfg = InvariantConfig::default();
    println!("{:>6} {:>6} {:>6} {:>14} {:>14} {:>14}", "q1", "q2", "u", "formula", "closed", "3/phi^4");
    for (q, u) in [([0.0, 0.0], 0.0), ([0.1, -0.2], 1.0), ([-0.25, 0.15], 2.5), ([0.2, 0.2], -2.0)] {
        let general = invariants::curvature_kappa(&sys, q, u, &cfg).unwrap();
        let closed = cozermelo_kappa_closed(data, q, u, &cfg).unwrap();
        let phi = 1.0 + 2.0 * q[0] * u.cos() + 2.0 * q[1] * u.sin();
        println!("{:6.2} {:6.2} {:6.2} {general:14.9} {closed:14.9} {:14.9}", q[0], q[1], u, 3.0 / phi.powi(4));
    }
}
