//! Sup-norm verdicts for a flat metric, a Zermelo problem and a co-Zermelo problem.

use control_curvature::expr::Expression;
use control_curvature::invariants::InvariantConfig;
use control_curvature::report::{cmd_check, selftest, RegionGrid};
use control_curvature::systems::{ControlSystem2D, FramePair, ZermeloData};

fn main() {
    let grid = RegionGrid::new([-0.3, 0.3], [-0.3, 0.3], 5, 12).expect("valid grid");
    let cfg = InvariantConfig::default();
    let drift = [Expression::constant(0.3), Expression::constant(0.1)];
    let systems = [
        ("flat", ControlSystem2D::riemannian(FramePair::euclidean())),
        ("constant drift", ControlSystem2D::zermelo(ZermeloData::from_coordinate_drift(FramePair::euclidean(), drift))),
        ("co-Zermelo", selftest::cozermelo_example()),
    ];
    for (name, sys) in systems {
        let r = cmd_check(&sys, &grid, &cfg);
        println!(
            "{name:>15}: thm1 {:5} thm2 {:5}  sup|kappa| {:.2e}  sup|Lhb| {:.2e}  sup|Lvhb| {:.2e}",
            r.verdict_thm1, r.verdict_thm2, r.sup_kappa, r.sup_lhb, r.sup_lvhb
        );
    }
}
