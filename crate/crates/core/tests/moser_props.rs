//! Property tests for the Moser transport map and its Jacobian.

use control_curvature::flows::{moser_transport, MoserFamily, TransportConfig};
use control_curvature::report::random;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = MoserFamily> {
    (0u64..10_000, any::<bool>()).prop_map(|(seed, dep)| random::moser_family(seed, dep))
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-0.5..0.5f64, -0.5..0.5f64]
}

fn offset() -> impl Strategy<Value = f64> {
    -random::MOSER_SPAN..random::MOSER_SPAN
}

fn cfg() -> TransportConfig {
    TransportConfig::default()
}

/// Composition and inversion hold for the exact flow; the fine step count
/// pushes the RK4 defect below the tolerance.
fn fine() -> TransportConfig {
    TransportConfig { steps: 1024, ..TransportConfig::default() }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_length_transport_is_identity(fam in family(), q in point(), du in offset()) {
        let u = fam.u0() + du;
        let (p, j) = moser_transport(&fam, q, u, u, &cfg()).unwrap();
        prop_assert_eq!(p, q);
        prop_assert_eq!(j, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn transports_compose(fam in family(), q in point(), a in offset(), b in offset(), c in offset()) {
        let (a, b, c) = (fam.u0() + a, fam.u0() + b, fam.u0() + c);
        let direct = moser_transport(&fam, q, a, c, &fine());
        let first = moser_transport(&fam, q, a, b, &fine());
        // Near-blow-up orbits are outside the tested region.
        prop_assume!(direct.is_ok() && first.is_ok());
        let (direct, _) = direct.unwrap();
        let mid = first.unwrap().0;
        let second = moser_transport(&fam, mid, b, c, &fine());
        prop_assume!(second.is_ok());
        let (two_step, _) = second.unwrap();
        let scale = direct[0].abs().max(direct[1].abs()).max(1.0);
        prop_assert!(dist(direct, two_step) < 1e-6 * scale, "{direct:?} vs {two_step:?}");
    }

    #[test]
    fn round_trip_returns_home(fam in family(), q in point(), b in offset()) {
        let a = fam.u0();
        let there = moser_transport(&fam, q, a, a + b, &fine());
        prop_assume!(there.is_ok());
        let (p, j) = there.unwrap();
        let (back, jb) = moser_transport(&fam, p, a + b, a, &fine()).unwrap();
        prop_assert!(dist(back, q) < 1e-6, "{back:?} vs {q:?}");
        // The Jacobians of inverse maps multiply to the identity.
        for r in 0..2 {
            for c in 0..2 {
                let prod = jb[r][0] * j[0][c] + jb[r][1] * j[1][c];
                let id = if r == c { 1.0 } else { 0.0 };
                prop_assert!((prod - id).abs() < 1e-5, "J_back·J [{r}][{c}] = {prod}");
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(fam in family(), q in point(), b in offset()) {
        let (a, h) = (fam.u0(), 1e-6);
        let base = moser_transport(&fam, q, a, a + b, &cfg());
        prop_assume!(base.is_ok());
        let (_, j) = base.unwrap();
        for k in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let (pp, _) = moser_transport(&fam, qp, a, a + b, &cfg()).unwrap();
            let (pm, _) = moser_transport(&fam, qm, a, a + b, &cfg()).unwrap();
            for r in 0..2 {
                let fd = (pp[r] - pm[r]) / (2.0 * h);
                prop_assert!((fd - j[r][k]).abs() < 1e-6 * j[r][k].abs().max(1.0), "J[{r}][{k}]: fd {fd} vs {}", j[r][k]);
            }
        }
    }

    #[test]
    fn q2_free_families_preserve_area(seed in 0u64..10_000, q in point(), b in offset()) {
        let fam = random::moser_family(seed, false);
        let (_, j) = moser_transport(&fam, q, fam.u0(), fam.u0() + b, &cfg()).unwrap();
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        prop_assert!((det - 1.0).abs() < 1e-9, "det {det}");
    }
}
