//! Compare κ from the coordinate formula with κ read off the double bracket
//! `[h, [v, h]] = κ·v` on a random system.

use control_curvature::invariants::{self, InvariantConfig};
use control_curvature::report::random;

fn main() {
    let rs = random::polynomial_system(3, 6);
    println!("f1 = {}\nf2 = {}", rs.f[0], rs.f[1]);
    let cfg = InvariantConfig::default();
    for (q, u) in &rs.points {
        let formula = invariants::curvature_kappa(&rs.system, *q, *u, &cfg).unwrap();
        let oracle = invariants::bracket_oracle_kappa(&rs.system, *q, *u, &cfg).unwrap();
        println!(
            "q = ({:+.3}, {:+.3}) u = {:.3}: formula {formula:+.9} bracket {:+.9} q-residual {:.1e}",
            q[0], q[1], u, oracle.kappa, oracle.q_residual
        );
    }
}
