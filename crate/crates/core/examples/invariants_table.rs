//! Tabulate the fiber invariants of the round sphere and print a few rows.

use control_curvature::invariants::InvariantConfig;
use control_curvature::report::{cmd_invariants, Format, RegionGrid};
use control_curvature::systems::{ControlSystem2D, FramePair};

fn main() {
    let sys = ControlSystem2D::riemannian(FramePair::round_sphere());
    let grid = RegionGrid::new([1.0, 2.0], [-0.5, 0.5], 3, 8).expect("valid grid");
    let table = cmd_invariants(&sys, &grid, &InvariantConfig::default());

    let csv = table.render(Format::Csv);
    for line in csv.lines().take(6) {
        println!("{line}");
    }
    println!("... {} rows, {} excluded", table.rows.len(), table.excluded());

    // On a Riemannian surface κ is the Gaussian curvature, here 1.
    let worst = table.rows.iter().filter_map(|r| r.kappa).fold(0.0f64, |m, k| m.max((k - 1.0).abs()));
    println!("max |kappa - 1| = {worst:.2e}");
}
