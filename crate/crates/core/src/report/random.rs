//! Seeded random systems for the identity and generator batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flows::MoserFamily;
use crate::invariants;
use crate::linalg::Vec2;
use crate::systems::{ControlDomain, ControlSystem2D};

const MONOMIALS: [&str; 5] = ["q1", "q2", "q1^2", "q1*q2", "q2^2"];
const TRIG: [&str; 4] = ["cos(u)", "sin(u)", "cos(2*u)", "sin(2*u)"];

/// Largest |q| for sample points.
pub const POINT_RADIUS: f64 = 0.5;
/// Sample points need `|w1|, |w2|` at least this large.
pub const REGULARITY_MARGIN: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct RandomSystem {
    pub seed: u64,
    pub f: [String; 2],
    pub system: ControlSystem2D,
    pub points: Vec<(Vec2, f64)>,
}

fn term(rng: &mut ChaCha8Rng) -> String {
    let coef: f64 = rng.gen_range(-0.1..0.1);
    let m = MONOMIALS[rng.gen_range(0..MONOMIALS.len())];
    let t = TRIG[rng.gen_range(0..TRIG.len())];
    format!(" {:+.6}*{m}*{t}", coef)
}

/// A perturbed circle `(cos u, sin u) + Σ a·m(q)·t(u)` with q-monomials of
/// degree one or two, and `n_points` regular points with |q| ≤ 0.5.
pub fn polynomial_system(seed: u64, n_points: usize) -> RandomSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut component = |base: &str| {
        let mut s = base.to_string();
        for _ in 0..3 {
            s.push_str(&term(&mut rng));
        }
        s
    };
    let f = [component("cos(u)"), component("sin(u)")];
    let system = ControlSystem2D::parse_general(&f[0], &f[1], ControlDomain::Circle)
        .expect("generated expressions parse");
    let mut points = Vec::with_capacity(n_points);
    let mut tries = 0;
    while points.len() < n_points && tries < 100 * n_points {
        tries += 1;
        let r = POINT_RADIUS * rng.gen::<f64>().sqrt();
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let q = [r * phi.cos(), r * phi.sin()];
        let u: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        if let Ok((w1, w2)) = invariants::check_regularity(&system, q, u) {
            if w1.abs() > REGULARITY_MARGIN && w2.abs() > REGULARITY_MARGIN {
                points.push((q, u));
            }
        }
    }
    RandomSystem { seed, f, system, points }
}

/// Control half-width for generated systems in the batteries. Transport of
/// the q2-dependent families can blow up before the default span of π.
pub const MOSER_SPAN: f64 = 2.0;

/// A random Moser family. With `q2_dependent` false, `a2` depends on u only.
pub fn moser_family(seed: u64, q2_dependent: bool) -> MoserFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || rng.gen_range(-0.4..0.4);
    let a1 = format!("{:.6} {:+.6}*sin(u)", c(), c());
    let mut a2 = format!("{:.6}*cos(u)", c());
    if q2_dependent {
        a2.push_str(&format!(" {:+.6}*q2^2 {:+.6}*q2*sin(u)", c(), c()));
    }
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let u0 = rng.gen_range(-1.0..1.0);
    MoserFamily::parse(&a1, &a2, sign, u0).expect("generated family is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_regular() {
        let a = polynomial_system(7, 20);
        let b = polynomial_system(7, 20);
        assert_eq!(a.f, b.f);
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 20);
        for (q, _) in &a.points {
            assert!(q[0].hypot(q[1]) <= POINT_RADIUS);
        }
    }

    #[test]
    fn families_respect_dependence() {
        for seed in 0..10 {
            assert!(moser_family(seed, false).is_q2_free());
            assert!(!moser_family(seed, true).is_q2_free());
        }
    }
}
