//! Build the commuting-frame system of a Moser family and check that
//! `f` and `∂f/∂u` commute.

use control_curvature::flows::{generate_commuting_system, GenerateConfig, MoserFamily};
use control_curvature::invariants;

fn main() {
    let fam = MoserFamily::parse("0.2*sin(u)", "0.1*cos(u) + 0.3*q2^2", 1.0, 0.0).expect("valid family");
    let cfg = GenerateConfig { span: 2.0, ..GenerateConfig::default() };
    let sys = generate_commuting_system(&fam, &cfg);
    println!("domain {:?}", sys.domain());
    for (q, u) in [([0.0, 0.0], 0.0), ([0.2, -0.1], 0.8), ([-0.3, 0.25], -1.5)] {
        let f = sys.velocity(q, u).unwrap();
        let bracket = invariants::control_bracket(&sys, q, u).unwrap();
        println!(
            "q = ({:+.2}, {:+.2}) u = {:+.2}: f = ({:+.6}, {:+.6}) |[f, f_u]| = {:.1e}",
            q[0], q[1], u, f[0], f[1], bracket[0].hypot(bracket[1])
        );
    }
}
