//! Self-test battery: closed forms, Riemannian sanity, identities, dual-path κ,
//! verdicts, Moser generator, flows and reparametrisation invariance.
//!
//! Each check is a reduced copy of the corresponding acceptance criterion.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::fd::FdConfig;
use crate::flows::{
    extremal_flow, extremal_flow_with_checkpoints, generate_commuting_system, transported_system,
    zermelo_closed_form_flow, FlowConfig, GenerateConfig, MoserFamily, TransportConfig,
};
use crate::invariants::{self, InvariantConfig, InvariantSample};
use crate::linalg::Vec2;
use crate::systems::{CoZermeloData, ControlSystem2D, FramePair, ZermeloData};

use super::{cmd_check, random, RegionGrid};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SelftestOptions {
    pub quick: bool,
    /// Flip the sign of b everywhere; the identity check must then fail.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestSummary {
    pub passed: bool,
    pub quick: bool,
    pub inject_fault: bool,
    pub checks: Vec<CheckResult>,
}

impl SelftestSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises") + "\n"
    }
}

struct Sizes {
    ac1_grid: (usize, usize),
    riem_grid: (usize, usize),
    systems: usize,
    points: usize,
    families: (usize, usize),
    moser_grid: (usize, usize),
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes { ac1_grid: (5, 8), riem_grid: (3, 8), systems: 3, points: 6, families: (1, 1), moser_grid: (3, 8) }
        } else {
            Sizes { ac1_grid: (9, 16), riem_grid: (5, 12), systems: 20, points: 50, families: (2, 3), moser_grid: (7, 12) }
        }
    }
}

fn grid(q1: [f64; 2], q2: [f64; 2], (nq, nu): (usize, usize)) -> RegionGrid {
    RegionGrid::new(q1, q2, nq, nu).expect("self-test grids are valid")
}

fn max_by<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64, String> + Sync) -> Result<f64, String> {
    items.par_iter().map(&f).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

pub fn cozermelo_example() -> ControlSystem2D {
    let data = CoZermeloData::from_coordinate_form(
        FramePair::euclidean(),
        [crate::expr::Expression::parse("2*q1").unwrap(), crate::expr::Expression::parse("2*q2").unwrap()],
    );
    ControlSystem2D::cozermelo(data)
}

fn cozermelo_closed_kappa(q: Vec2, u: f64) -> f64 {
    3.0 * (1.0 + 2.0 * q[0] * u.cos() + 2.0 * q[1] * u.sin()).powi(-4)
}

fn check_closed_form(s: &Sizes, cfg: &InvariantConfig) -> Result<String, String> {
    let sys = cozermelo_example();
    let pts = grid([-0.3, 0.3], [-0.3, 0.3], s.ac1_grid).points(sys.domain());
    let worst = max_by(&pts, |&(q, u)| {
        let k = invariants::curvature_kappa(&sys, q, u, cfg).map_err(|e| e.to_string())?;
        let exact = cozermelo_closed_kappa(q, u);
        Ok(((k - exact) / exact).abs())
    })?;
    let msg = format!("max relative error {worst:.2e} over {} samples", pts.len());
    if worst <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_riemannian(s: &Sizes, cfg: &InvariantConfig) -> Result<String, String> {
    let flat = ControlSystem2D::riemannian(FramePair::euclidean());
    let pts = grid([-1.0, 1.0], [-1.0, 1.0], s.riem_grid).points(flat.domain());
    let flat_worst = max_by(&pts, |&(q, u)| {
        let k = invariants::curvature_kappa(&flat, q, u, cfg).map_err(|e| e.to_string())?;
        let b = invariants::fiber_data(&flat, q, u, cfg).map_err(|e| e.to_string())?.b;
        let (c, _) = invariants::structure_c(&flat, q, u, cfg).map_err(|e| e.to_string())?;
        Ok(k.abs().max(b.abs()).max(c.abs()))
    })?;
    let mut worst_k: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for (frame, q1, q2) in [
        (FramePair::round_sphere(), [0.5, 2.5], [-1.0, 1.0]),
        (FramePair::hyperbolic_half_plane(), [-1.0, 1.0], [0.5, 2.0]),
    ] {
        let sys = ControlSystem2D::riemannian(frame.clone());
        let pts = grid(q1, q2, s.riem_grid).points(sys.domain());
        worst_k = worst_k.max(max_by(&pts, |&(q, u)| {
            let k = invariants::curvature_kappa(&sys, q, u, cfg).map_err(|e| e.to_string())?;
            let gauss = frame.gaussian_curvature(q, cfg.fd).map_err(|e| e.to_string())?;
            Ok((k - gauss).abs())
        })?);
        worst_b = worst_b.max(max_by(&pts, |&(q, u)| {
            Ok(invariants::fiber_data(&sys, q, u, cfg).map_err(|e| e.to_string())?.b.abs())
        })?);
    }
    let msg = format!("flat max {flat_worst:.2e}, curved |κ−K| {worst_k:.2e}, |b| {worst_b:.2e}");
    if flat_worst < 1e-8 && worst_k <= 1e-4 && worst_b < 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// FD steps for the convergence study, each half the previous. Smaller steps
/// reach the roundoff floor of the nested differences in `res_bnk`.
pub const CONVERGENCE_STEPS: [f64; 3] = [0.08, 0.04, 0.02];

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}


fn identity_samples(
    s: &Sizes,
    cfg: &InvariantConfig,
) -> Result<Vec<(random::RandomSystem, Vec<[InvariantSample; 3]>)>, String> {
    (0..s.systems as u64)
        .into_par_iter()
        .map(|seed| {
            let rs = random::polynomial_system(seed, s.points);
            let samples = rs
                .points
                .iter()
                .map(|&(q, u)| {
                    let at = |h: f64| {
                        let c = InvariantConfig { fd: FdConfig { step: h, richardson: 1 }, ..*cfg };
                        invariants::derived_invariants(&rs.system, q, u, &c)
                            .map_err(|e| format!("seed {seed} at q={q:?}, u={u}: {e}"))
                    };
                    Ok([at(CONVERGENCE_STEPS[0])?, at(CONVERGENCE_STEPS[1])?, at(CONVERGENCE_STEPS[2])?])
                })
                .collect::<Result<Vec<_>, String>>()?;
            Ok((rs, samples))
        })
        .collect()
}

fn check_identities(
    battery: &[(random::RandomSystem, Vec<[InvariantSample; 3]>)],
) -> Result<String, String> {
    let mut min_order = f64::INFINITY;
    let mut terminal: f64 = 0.0;
    for (_, samples) in battery {
        for pick in [|s: &InvariantSample| s.res_bnk, |s: &InvariantSample| s.res_lemma] {
            let e: Vec<f64> = (0..3).map(|k| rms(&samples.iter().map(|x| pick(&x[k])).collect::<Vec<_>>())).collect();
            terminal = terminal.max(samples.iter().map(|x| pick(&x[2]).abs()).fold(0.0, f64::max));
            for w in e.windows(2) {
                min_order = min_order.min((w[0] / w[1]).log2());
            }
        }
    }
    let msg = format!("min order {min_order:.2}, terminal max {terminal:.2e}");
    if min_order >= 1.8 && terminal < 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_dual_path(battery: &[(random::RandomSystem, Vec<[InvariantSample; 3]>)]) -> Result<String, String> {
    let worst = battery
        .iter()
        .flat_map(|(_, s)| s.iter())
        .map(|x| (x[2].res_bracket / x[2].kappa.abs().max(1.0)).abs())
        .fold(0.0, f64::max);
    let msg = format!("max relative difference {worst:.2e}");
    if worst <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn zermelo_constant() -> ControlSystem2D {
    ControlSystem2D::zermelo(
        ZermeloData::from_coordinate_drift(
            FramePair::euclidean(),
            [crate::expr::Expression::constant(0.3), crate::expr::Expression::constant(0.1)],
        ),
    )
}

fn zermelo_shear_data() -> ZermeloData {
    ZermeloData::from_coordinate_drift(
        FramePair::euclidean(),
        [crate::expr::Expression::parse("q2").unwrap(), crate::expr::Expression::constant(0.0)],
    )
}

fn check_verdicts(s: &Sizes, cfg: &InvariantConfig) -> Result<String, String> {
    let g = grid([-0.3, 0.3], [-0.3, 0.3], s.riem_grid);
    let constant = cmd_check(&zermelo_constant(), &g, cfg);
    let shear = cmd_check(&ControlSystem2D::zermelo(zermelo_shear_data()), &g, cfg);
    let co = cmd_check(&cozermelo_example(), &g, cfg);
    let msg = format!(
        "constant drift thm2={}, shear drift thm2={}, co-Zermelo thm1={}",
        constant.verdict_thm2, shear.verdict_thm2, co.verdict_thm1
    );
    if constant.verdict_thm2 && !shear.verdict_thm2 && !co.verdict_thm1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rotation_error() -> Result<f64, String> {
    let fam = MoserFamily::parse("0", "0", 1.0, 0.4).map_err(|e| e.to_string())?;
    let cfg = GenerateConfig { transport: TransportConfig { steps: 1024, ..Default::default() }, ..Default::default() };
    let sys = transported_system(&fam, &cfg);
    let mut worst: f64 = 0.0;
    for (q, u) in grid([-0.3, 0.3], [-0.3, 0.3], (3, 8)).points(sys.domain()) {
        let f = sys.velocity(q, u).map_err(|e| e.to_string())?;
        worst = worst.max((f[0] - (u - 0.4).cos()).abs()).max((f[1] - (u - 0.4).sin()).abs());
    }
    Ok(worst)
}

fn check_moser(s: &Sizes, cfg: &InvariantConfig) -> Result<String, String> {
    let (free, dependent) = s.families;
    let gen = GenerateConfig { span: random::MOSER_SPAN, ..Default::default() };
    let mut families: Vec<(MoserFamily, ControlSystem2D)> = Vec::new();
    for k in 0..free {
        let fam = random::moser_family(100 + k as u64, false);
        families.push((fam.clone(), transported_system(&fam, &gen)));
        families.push((fam.clone(), generate_commuting_system(&fam, &gen)));
    }
    for k in 0..dependent {
        let fam = random::moser_family(200 + k as u64, true);
        families.push((fam.clone(), generate_commuting_system(&fam, &gen)));
    }
    let g = grid([-0.3, 0.3], [-0.3, 0.3], s.moser_grid);
    let (mut bracket, mut kappa): (f64, f64) = (0.0, 0.0);
    let mut thm2 = true;
    for (fam, sys) in &families {
        let pts = g.points(sys.domain());
        bracket = bracket.max(max_by(&pts, |&(q, u)| {
            let b = invariants::control_bracket(sys, q, u).map_err(|e| e.to_string())?;
            Ok(b[0].hypot(b[1]))
        })?);
        let report = cmd_check(sys, &g, cfg);
        if report.excluded > 0 {
            return Err(format!("{} samples excluded: {:?}", report.excluded, report.excluded_reasons));
        }
        kappa = kappa.max(report.sup_kappa);
        if fam.is_q2_free() {
            thm2 &= report.verdict_thm2;
        }
    }
    let rot = rotation_error()?;
    let msg = format!(
        "{} systems: sup|[f,f_u]| {bracket:.2e}, sup|κ| {kappa:.2e}, u-only families thm2={thm2}, rotation error {rot:.2e}",
        families.len()
    );
    if bracket < 1e-6 && kappa < 1e-4 && thm2 && rot <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_flows(cfg: &InvariantConfig) -> Result<String, String> {
    let fc = FlowConfig { invariants: *cfg, ..Default::default() };
    let times: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let data = ZermeloData::from_coordinate_drift(
        FramePair::euclidean(),
        [crate::expr::Expression::parse("0.3*sin(q2)").unwrap(), crate::expr::Expression::parse("0.2*cos(q1)").unwrap()],
    );
    let sys = ControlSystem2D::zermelo(data.clone());
    let mut zermelo: f64 = 0.0;
    for u0 in [0.0, 1.3, 2.9, 4.4] {
        let a = extremal_flow_with_checkpoints(&sys, [0.1, -0.2], u0, 1.0, &times, &fc).map_err(|e| e.to_string())?;
        let b = zermelo_closed_form_flow(&data, [0.1, -0.2], u0, 1.0, &times, &fc).map_err(|e| e.to_string())?;
        for &t in &times {
            let (qa, _) = a.state_at(t).ok_or("general flow stopped early")?;
            let (qb, _) = b.state_at(t).ok_or("closed-form flow stopped early")?;
            zermelo = zermelo.max((qa[0] - qb[0]).hypot(qa[1] - qb[1]));
        }
    }
    let sphere = ControlSystem2D::riemannian(FramePair::round_sphere());
    let mut clairaut: f64 = 0.0;
    for u0 in [0.3, 1.1, 2.0] {
        let tr = extremal_flow(&sphere, [1.2, 0.3], u0, 1.0, &fc).map_err(|e| e.to_string())?;
        let first = tr.samples[0];
        let j0 = first.q[0].sin() * first.u.sin();
        for s in &tr.samples {
            clairaut = clairaut.max((s.q[0].sin() * s.u.sin() - j0).abs());
        }
    }
    let msg = format!("Zermelo path difference {zermelo:.2e}, Clairaut drift {clairaut:.2e}");
    if zermelo <= 1e-6 && clairaut <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_invariance(s: &Sizes, cfg: &InvariantConfig) -> Result<String, String> {
    let mut systems = vec![cozermelo_example()];
    systems.extend((0..2).map(|seed| random::polynomial_system(seed, 0).system));
    let delta = 0.7;
    let pts = grid([-0.3, 0.3], [-0.3, 0.3], s.riem_grid).points(systems[0].domain());
    let mut worst: f64 = 0.0;
    for sys in &systems {
        let shifted = sys.with_control_shift(delta).ok_or("shift unsupported")?;
        let reversed = sys.with_reversed_control().ok_or("reversal unsupported")?;
        worst = worst.max(max_by(&pts, |&(q, u)| {
            let k = |s: &ControlSystem2D, u: f64| invariants::curvature_kappa(s, q, u, cfg).map_err(|e| e.to_string());
            let k0 = k(sys, u)?;
            Ok((k(&shifted, u - delta)? - k0).abs().max((k(&reversed, -u)? - k0).abs()))
        })?);
    }
    let msg = format!("max κ change {worst:.2e}");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn timed(id: &'static str, name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    let start = Instant::now();
    let r = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult { id, name, passed, detail, seconds }
}

pub fn run(opts: SelftestOptions) -> SelftestSummary {
    let sizes = Sizes::new(opts.quick);
    let cfg = InvariantConfig { flip_b: opts.inject_fault, ..Default::default() };
    let s = &sizes;
    let mut checks = vec![
        timed("AC1", "closed-form curvature", || check_closed_form(s, &cfg)),
        timed("AC2", "Riemannian sanity", || check_riemannian(s, &cfg)),
    ];
    let start = Instant::now();
    let battery = identity_samples(s, &cfg);
    let battery_time = start.elapsed().as_secs_f64();
    for (id, name, check) in [
        ("AC3", "identity convergence", check_identities as fn(&_) -> _),
        ("AC4", "dual-path curvature", check_dual_path),
    ] {
        let mut r = timed(id, name, || battery.as_ref().map_err(Clone::clone).and_then(|b| check(b)));
        r.seconds += battery_time / 2.0;
        checks.push(r);
    }
    checks.push(timed("AC5", "trivializability verdicts", || check_verdicts(s, &cfg)));
    checks.push(timed("AC6", "Moser generator", || check_moser(s, &cfg)));
    checks.push(timed("AC7", "extremal flows", || check_flows(&cfg)));
    checks.push(timed("AC8", "reparametrisation invariance", || check_invariance(s, &cfg)));
    SelftestSummary { passed: checks.iter().all(|c| c.passed), quick: opts.quick, inject_fault: opts.inject_fault, checks }
}
